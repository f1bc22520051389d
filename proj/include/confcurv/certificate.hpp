#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

namespace confcurv {

enum class CertificateScope { Global, OnX };

struct ABCertificate {
    double A = 0.0;
    double B = 0.0;
    double eps0 = 0.0;
    std::size_t sample_count = 0;
    double worst_slack = 0.0;
    std::uint64_t seed = 0;
    CertificateScope scope = CertificateScope::Global;
    double sobolev = 1.0;  // empirical constant used by derived bounds

    // Lower bound for -k on X (and for k-dependent bounds on Y).
    double c0(int n) const;
};

void write_certificate(std::ostream& os, const ABCertificate& c);
ABCertificate read_certificate(std::istream& is);

}  // namespace confcurv
