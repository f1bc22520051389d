#include "confcurv/certificate.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace confcurv {

double ABCertificate::c0(int n) const
{
    if (!(B > 0.0)) return 0.0;
    return std::pow(1.0 / (sobolev * sobolev * B), static_cast<double>(n) / (n - 2));
}

void write_certificate(std::ostream& os, const ABCertificate& c)
{
    os << std::setprecision(17);
    os << "A=" << c.A << '\n';
    os << "B=" << c.B << '\n';
    os << "eps0=" << c.eps0 << '\n';
    os << "seed=" << c.seed << '\n';
    os << "sample_count=" << c.sample_count << '\n';
    os << "worst_slack=" << c.worst_slack << '\n';
    os << "scope=" << (c.scope == CertificateScope::Global ? "global" : "on_x") << '\n';
    os << "sobolev=" << c.sobolev << '\n';
}

ABCertificate read_certificate(std::istream& is)
{
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(is, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto get = [&](const char* key) {
        auto it = kv.find(key);
        if (it == kv.end()) throw std::runtime_error(std::string("certificate missing key ") + key);
        return it->second;
    };
    ABCertificate c;
    c.A = std::stod(get("A"));
    c.B = std::stod(get("B"));
    c.eps0 = std::stod(get("eps0"));
    c.seed = std::stoull(get("seed"));
    c.sample_count = std::stoull(get("sample_count"));
    c.worst_slack = std::stod(get("worst_slack"));
    c.scope = get("scope") == "global" ? CertificateScope::Global : CertificateScope::OnX;
    if (kv.count("sobolev")) c.sobolev = std::stod(kv["sobolev"]);
    return c;
}

}  // namespace confcurv
