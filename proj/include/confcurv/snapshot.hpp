#pragma once

#include <iosfwd>
#include <string>

#include "confcurv/grid.hpp"

namespace confcurv {

// Binary field snapshot: "CSCF", u32 version, u8 n, u64 points, f64 side, f64 values (little endian).
void write_snapshot(std::ostream& os, const ScalarField& f);
ScalarField read_snapshot(std::istream& is);

void save_snapshot(const std::string& path, const ScalarField& f);
ScalarField load_snapshot(const std::string& path);

}  // namespace confcurv
