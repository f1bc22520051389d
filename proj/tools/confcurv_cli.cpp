#include <CLI11.hpp>

#include <iostream>
#include <sstream>

#include "confcurv/experiments.hpp"

using namespace confcurv;

namespace {

struct Common {
    std::string config;
    int n = 0;
    std::size_t grid = 0;
    long long seed = -1;
    std::string out;
    std::string which;
    std::size_t samples = 0;
    std::string lambda_sweep;
};

void add_common(CLI::App* sub, Common& c)
{
    sub->add_option("--config", c.config, "key=value experiment configuration");
    sub->add_option("--n", c.n, "dimension (3, 4 or 5)");
    sub->add_option("--grid", c.grid, "points per axis");
    sub->add_option("--seed", c.seed, "random seed");
    sub->add_option("--out", c.out, "output directory");
    sub->add_option("--which", c.which, "energy: j or i")->check(CLI::IsMember({"j", "i"}));
    sub->add_option("--samples", c.samples, "random-field samples for the certificate");
    sub->add_option("--lambda-sweep", c.lambda_sweep, "comma-separated bubble concentrations");
}

ExperimentConfig resolve(const Common& c)
{
    ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_config(c.config);
    if (c.n) apply_config_line(cfg, "n", std::to_string(c.n));
    if (c.grid) apply_config_line(cfg, "grid", std::to_string(c.grid));
    if (c.seed >= 0) {
        apply_config_line(cfg, "seed", std::to_string(c.seed));
        apply_config_line(cfg, "cert.seed", std::to_string(c.seed));
    }
    if (!c.out.empty()) cfg.out = c.out;
    if (!c.which.empty()) apply_config_line(cfg, "which", c.which);
    if (c.samples) apply_config_line(cfg, "cert.random_fields", std::to_string(c.samples));
    if (!c.lambda_sweep.empty()) apply_config_line(cfg, "bubble.lambdas", c.lambda_sweep);
    cfg.grid_spec();
    return cfg;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Prescribed scalar curvature experiments on the flat torus"};
    app.require_subcommand(1);
    Common c;
    const std::pair<const char*, const char*> names[] = {
        {"constants", "bubble integrals by quadrature and closed form"},
        {"necessary", "necessary conditions on K"},
        {"two-solutions", "negative and positive solution pipeline"},
        {"flow", "run one normalized gradient flow"},
        {"minimize", "minimize J or I with restarts"},
        {"certify", "search an empirical (A, B) certificate"},
        {"decompose", "bubble decomposition of a synthesized field"},
    };
    std::vector<CLI::App*> subs;
    for (const auto& [name, desc] : names) {
        auto* s = app.add_subcommand(name, desc);
        add_common(s, c);
        subs.push_back(s);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : static_cast<int>(kExitUsage);
    }
    const std::string cmd = app.get_subcommands().front()->get_name();
    try {
        if (cmd == "constants") return cmd_constants(c.n ? c.n : 3, c.out.empty() ? "." : c.out, std::cout);
        const ExperimentConfig cfg = resolve(c);
        if (cmd == "necessary") return cmd_necessary(cfg, std::cout);
        if (cmd == "two-solutions") return cmd_two_solutions(cfg, std::cout);
        if (cmd == "flow") return cmd_flow(cfg, std::cout);
        if (cmd == "minimize") return cmd_minimize(cfg, std::cout);
        if (cmd == "certify") return cmd_certify(cfg, std::cout);
        if (cmd == "decompose") return cmd_decompose(cfg, std::cout);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
