#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace histkit {

inline constexpr const char* kVersion = "0.1.0";

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

// One bit per decomposition member; 1 = member included in the coarse event.
using Mask = std::vector<std::uint8_t>;

// All thresholds live here so every check in the library reads from one
// place.  eps_structure guards algebraic identities (projector laws,
// unitarity), eps_decoherence guards off-diagonal decoherence-functional
// entries, eps_prob is the scale below which a probability counts as zero.
struct Tolerances {
    double eps_structure = 1e-10;
    double eps_decoherence = 1e-9;
    double eps_prob = 1e-12;
};

}  // namespace histkit
