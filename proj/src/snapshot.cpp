#include "confcurv/snapshot.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace confcurv {

namespace {

constexpr char kMagic[4] = {'C', 'S', 'C', 'F'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put_le(std::ostream& os, T v)
{
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big)
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
    os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T get_le(std::istream& is)
{
    unsigned char buf[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(buf), sizeof(T))) throw std::runtime_error("truncated snapshot");
    if constexpr (std::endian::native == std::endian::big)
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
}

}  // namespace

void write_snapshot(std::ostream& os, const ScalarField& f)
{
    os.write(kMagic, 4);
    put_le<std::uint32_t>(os, kVersion);
    put_le<std::uint8_t>(os, static_cast<std::uint8_t>(f.grid.n));
    put_le<std::uint64_t>(os, f.grid.points);
    put_le<double>(os, f.grid.side);
    for (double v : f.values) put_le<double>(os, v);
    if (!os) throw std::runtime_error("snapshot write failed");
}

ScalarField read_snapshot(std::istream& is)
{
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("not a CSCF snapshot");
    const auto version = get_le<std::uint32_t>(is);
    if (version != kVersion) throw std::runtime_error("unsupported snapshot version " + std::to_string(version));
    const int n = get_le<std::uint8_t>(is);
    const auto points = get_le<std::uint64_t>(is);
    const double side = get_le<double>(is);
    const GridSpec g(n, points, side);
    ScalarField f(g);
    for (double& v : f.values) v = get_le<double>(is);
    require_finite(f);
    return f;
}

void save_snapshot(const std::string& path, const ScalarField& f)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path);
    write_snapshot(os, f);
}

ScalarField load_snapshot(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    return read_snapshot(is);
}

}  // namespace confcurv
