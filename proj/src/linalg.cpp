#include "histkit/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

namespace histkit {

namespace {

std::string shape_of(const Matrix& m) {
    std::ostringstream os;
    os << m.rows() << "x" << m.cols();
    return os.str();
}

void require_square(const Matrix& m, const char* what) {
    if (m.rows() == 0 || m.rows() != m.cols())
        throw ContractViolation(std::string(what) + ": expected a nonempty square matrix, got " + shape_of(m));
}

}  // namespace

double max_norm(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    return m.cwiseAbs().maxCoeff();
}

bool is_finite(const Matrix& m) {
    return m.allFinite();
}

Matrix mat_product(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw ContractViolation("mat_product: inner dimensions differ, " + shape_of(a) + " * " + shape_of(b));
    return a * b;
}

Matrix mat_sum(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ContractViolation("mat_sum: shapes differ, " + shape_of(a) + " + " + shape_of(b));
    return a + b;
}

Matrix mat_scale(Complex c, const Matrix& a) {
    return c * a;
}

Matrix mat_adjoint(const Matrix& a) {
    return a.adjoint();
}

Complex mat_trace(const Matrix& a) {
    require_square(a, "mat_trace");
    return a.trace();
}

double hermiticity_residual(const Matrix& m) {
    require_square(m, "hermiticity_residual");
    return max_norm(m - m.adjoint());
}

double idempotence_residual(const Matrix& m) {
    require_square(m, "idempotence_residual");
    return max_norm(m * m - m);
}

double unitarity_residual(const Matrix& m) {
    require_square(m, "unitarity_residual");
    Matrix id = Matrix::Identity(m.rows(), m.cols());
    return std::max(max_norm(m.adjoint() * m - id), max_norm(m * m.adjoint() - id));
}

bool check_projector(const Matrix& m, const Tolerances& tol) {
    if (m.rows() == 0 || m.rows() != m.cols() || !is_finite(m)) return false;
    return hermiticity_residual(m) <= tol.eps_structure && idempotence_residual(m) <= tol.eps_structure;
}

bool check_unitary(const Matrix& m, const Tolerances& tol) {
    if (m.rows() == 0 || m.rows() != m.cols() || !is_finite(m)) return false;
    return unitarity_residual(m) <= tol.eps_structure;
}

bool check_density(const Matrix& m, const Tolerances& tol) {
    if (m.rows() == 0 || m.rows() != m.cols() || !is_finite(m)) return false;
    if (hermiticity_residual(m) > tol.eps_structure) return false;
    if (std::abs(m.trace() - Complex(1.0, 0.0)) > tol.eps_structure) return false;
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() >= -tol.eps_structure;
}

bool commutes(const Matrix& a, const Matrix& b, const Tolerances& tol) {
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols())
        throw ContractViolation("commutes: operands must be square and equal-shaped, got " + shape_of(a) +
                                " vs " + shape_of(b));
    return max_norm(a * b - b * a) <= tol.eps_structure;
}

Matrix propagator(const Matrix& h, double dt, const Tolerances& tol) {
    require_square(h, "propagator");
    double herm = hermiticity_residual(h);
    if (!(herm <= tol.eps_structure)) {
        std::ostringstream os;
        os << "propagator: generator is not Hermitian, residual " << herm << " exceeds " << tol.eps_structure;
        throw ValidationError(os.str());
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    if (es.info() != Eigen::Success)
        throw ValidationError("propagator: eigendecomposition of the generator failed");
    const auto& lam = es.eigenvalues();
    Vector phases(lam.size());
    for (Eigen::Index k = 0; k < lam.size(); ++k)
        phases(k) = std::exp(Complex(0.0, -lam(k) * dt));
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

Matrix projector_onto(const Vector& v) {
    double n = v.norm();
    if (v.size() == 0 || n == 0.0)
        throw ContractViolation("projector_onto: zero vector has no associated ray");
    Vector u = v / n;
    return u * u.adjoint();
}

Matrix projector_from_span(const std::vector<Vector>& span, const Tolerances& tol) {
    if (span.empty())
        throw ContractViolation("projector_from_span: empty span");
    const Eigen::Index dim = span.front().size();
    Matrix p = Matrix::Zero(dim, dim);
    std::vector<Vector> unit;
    unit.reserve(span.size());
    for (std::size_t i = 0; i < span.size(); ++i) {
        if (span[i].size() != dim)
            throw ContractViolation("projector_from_span: span vectors have mixed dimensions");
        double n = span[i].norm();
        if (n == 0.0)
            throw ContractViolation("projector_from_span: zero vector in span");
        unit.push_back(span[i] / n);
    }
    for (std::size_t i = 0; i < unit.size(); ++i)
        for (std::size_t j = i + 1; j < unit.size(); ++j) {
            double ov = std::abs(unit[i].dot(unit[j]));
            if (!(ov <= tol.eps_structure)) {
                std::ostringstream os;
                os << "projector_from_span: vectors " << i << " and " << j << " overlap by " << ov
                   << ", exceeds " << tol.eps_structure;
                throw ValidationError(os.str());
            }
        }
    for (const auto& u : unit) p += u * u.adjoint();
    return p;
}

}  // namespace histkit
