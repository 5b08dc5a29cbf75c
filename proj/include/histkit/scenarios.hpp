#pragma once

#include <numbers>
#include <string>
#include <vector>

#include "histkit/scenario.hpp"

namespace histkit {

// Spin-1/2 prepared along +x and asked about z at one instant.  Exact
// probabilities 1/2 each; one-time families are automatically decoherent.
Scenario spin_half();

// Two slits on a periodic n-point line: Gaussian packets released from both
// slits at the first instant, position binned at the second after free
// flight.  Families: "onetime" (slits only), "union" (merged slit event,
// then bins) and "twotimes" (which slit, then bins; not decoherent).
// Preconditions: n a power of two >= 64, bins divides n, slit windows
// (3 sigma each side) disjoint and inside the line.
Scenario two_slit(int n = 128, double slit_left = -8.0, double slit_right = 8.0, double sigma = 2.0,
                  int bins = 16, double flight = 50.0);

// Three orthogonal boxes A, B, C; prepared in (|A>+|B>+|C>)/sqrt(3) and
// post-selected on (|A>+|B>-|C>)/sqrt(3).  Families "boxA" and "boxB" are
// each decoherent and each implies its own box with certainty; conjoining
// across them is refused.  P_A P_B = 0 even though P_A != 1 - P_B.
Scenario three_box();

// Spin-1 squared-component events.  Builds the (alpha, beta, gamma) triple
// of m = 0 rays along z, y, x and, per angle, the triple rotated about z,
// which shares the coarse element beta+gamma (named sigma2_z).  The
// scenario's contexts section holds the merged algebra; propagation from
// alpha = 1 reproduces the forced squared-spin values.  Angles must lie
// strictly inside (0, pi/2) and be pairwise distinct.
Scenario spin1_chain(const std::vector<double>& thetas = {std::numbers::pi / 4});

// Ray-set loader for coloring problems: bundled name or file path; bases
// become contexts, no closure.
ContextSet ks_dataset(const std::string& name);

// The demo registry used by the command-line tool ("spin-half", "two-slit",
// "three-box", "spin1-chain").  Unknown names throw ContractViolation.
Scenario demo_scenario(const std::string& name);
const std::vector<std::string>& demo_names();

}  // namespace histkit
