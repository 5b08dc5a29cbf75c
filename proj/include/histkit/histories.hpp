#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "histkit/linalg.hpp"
#include "histkit/types.hpp"

namespace histkit {

// Ordered times t0 < s1 < s2 < ... (t0 may equal s1; slices are strictly
// increasing).  t0 carries the initial state, each slice carries one
// projective decomposition.
struct TimeGrid {
    double t0 = 0.0;
    std::vector<double> slices;
};

void validate_grid(const TimeGrid& grid);

// Exhaustive set of mutually orthogonal projectors summing to the identity,
// attached to one slice of a grid.  Labels are stable member names used in
// reports and mask specs.
struct Decomposition {
    int time_index = 0;  // 1-based slice position
    std::vector<Matrix> members;
    std::vector<std::string> labels;
};

struct DecompositionReport {
    double sum_residual = 0.0;    // || sum_k P_k - 1 ||_max
    double ortho_residual = 0.0;  // max_{k != j} || P_k P_j ||_max
    bool passed = false;
};

DecompositionReport validate_decomposition(const Decomposition& d, const Tolerances& tol = {});

// Sum of the members selected by the mask (one bit per member).
Matrix coarse_projector(const Decomposition& d, const Mask& mask);

struct CoarseProjector {
    Mask mask;
    Matrix matrix;
};

// One chain: a coarse event at each slice of its family's grid.
struct History {
    std::vector<CoarseProjector> entries;
    std::vector<double> times;
    std::string label;
};

// A full framework: grid, one decomposition per slice, and the interval
// propagators.  unitaries[m] maps the state from the previous time
// (t0 for m == 0) to slices[m].
struct Family {
    TimeGrid grid;
    std::vector<Decomposition> decomps;
    std::vector<Matrix> unitaries;
    std::string name;

    int dim() const;
    std::size_t slice_count() const { return grid.slices.size(); }
};

// Validates everything: grid order, decomposition residuals, unitarity,
// matching dimensions and time indices.
Family make_family(TimeGrid grid, std::vector<Decomposition> decomps, std::vector<Matrix> unitaries,
                   std::string name, const Tolerances& tol = {});

// Same, with every interval propagator generated as exp(-i h dt).
Family make_family_generated(TimeGrid grid, std::vector<Decomposition> decomps, const Matrix& h,
                             std::string name, const Tolerances& tol = {});

std::string history_label(const Family& f, const std::vector<Mask>& masks);

// Builds the coarse history selected by one mask per slice.
History make_history(const Family& f, const std::vector<Mask>& masks);

// All fine-grained histories (single member per slice), lexicographic with
// the first slice most significant.  Throws EnumerationOverflow above cap.
std::vector<History> enumerate_fine(const Family& f, std::size_t cap = 1000000);

// Slice-wise equality of times and event projectors within eps_structure.
// Histories over different time grids are unequal, never an error.
bool same_history(const History& a, const History& b, const Tolerances& tol = {});

// Recovers a mask per slice expressing h in f, or nullopt when some event
// is not a union of f's members at that slice.
std::optional<std::vector<Mask>> express_in_family(const History& h, const Family& f,
                                                   const Tolerances& tol = {});

}  // namespace histkit
