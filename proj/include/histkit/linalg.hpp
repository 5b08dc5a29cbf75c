#pragma once

#include <vector>

#include "histkit/errors.hpp"
#include "histkit/types.hpp"

namespace histkit {

// Largest entry magnitude; the residual norm used by every check below.
double max_norm(const Matrix& m);

bool is_finite(const Matrix& m);

// Dimension-checked wrappers around the Eigen operators.  They exist so that
// mismatched operands fail with a message instead of an assert deep inside
// an expression template.
Matrix mat_product(const Matrix& a, const Matrix& b);
Matrix mat_sum(const Matrix& a, const Matrix& b);
Matrix mat_scale(Complex c, const Matrix& a);
Matrix mat_adjoint(const Matrix& a);
Complex mat_trace(const Matrix& a);

double hermiticity_residual(const Matrix& m);
double idempotence_residual(const Matrix& m);
double unitarity_residual(const Matrix& m);

// Orthogonal projector: Hermitian and idempotent within eps_structure.
bool check_projector(const Matrix& m, const Tolerances& tol = {});
bool check_unitary(const Matrix& m, const Tolerances& tol = {});
// Density matrix: Hermitian, eigenvalues >= -eps_structure, unit trace.
bool check_density(const Matrix& m, const Tolerances& tol = {});
bool commutes(const Matrix& a, const Matrix& b, const Tolerances& tol = {});

// exp(-i h dt) for Hermitian h, via eigendecomposition.  Throws
// ValidationError (with the residual) when h is not Hermitian.
Matrix propagator(const Matrix& h, double dt, const Tolerances& tol = {});

// |v><v| with v normalized first.  Zero vector is a ContractViolation.
Matrix projector_onto(const Vector& v);

// Sum of |v><v| over the given vectors, which must be mutually orthogonal
// and nonzero (each is normalized first).  ValidationError otherwise.
Matrix projector_from_span(const std::vector<Vector>& span, const Tolerances& tol = {});

}  // namespace histkit
