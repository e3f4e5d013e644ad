#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace cpcs {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

constexpr Complex iu{0.0, 1.0};

/// |m><n| on a dim-dimensional space.
inline Matrix projector(int m, int n, int dim) {
    if (dim <= 0) throw std::invalid_argument("projector: dim must be positive");
    if (m < 0 || n < 0 || m >= dim || n >= dim)
        throw std::out_of_range("projector: index out of range for dim " + std::to_string(dim));
    Matrix p = Matrix::Zero(dim, dim);
    p(m, n) = 1.0;
    return p;
}

inline Matrix dagger(const Matrix& a) { return a.adjoint(); }

/// max_ij |A - A^dagger|
inline double herm_defect(const Matrix& a) {
    return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const Matrix& a, double tol = 1e-12) {
    return herm_defect(a) < tol;
}

/// Smallest eigenvalue of the Hermitian part of a.
inline double min_eigenvalue(const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.adjoint()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

// Density matrices may be unnormalized: conditional states a rho a^dagger keep
// their trace (the emission likelihood) instead of 1.
struct DensityMatrix {
    Matrix mat;
    bool normalized = true;

    int dim() const { return static_cast<int>(mat.rows()); }

    static DensityMatrix pure(const CVector& ket) {
        return {ket * ket.adjoint(), true};
    }
    static DensityMatrix ground(int dim) {
        CVector k = CVector::Zero(dim);
        k(0) = 1.0;
        return pure(k);
    }
};

struct DensityReport {
    double herm_defect = 0;      // max |rho - rho^dagger|
    double trace = 0;            // Re tr(rho)
    double trace_deviation = 0;  // |tr-1| if normalized, distance from [0,inf) otherwise
    double min_eigenvalue = 0;
    bool hermitian_ok = true;
    bool trace_ok = true;
    bool positive_ok = true;

    bool ok() const { return hermitian_ok && trace_ok && positive_ok; }
};

/// Diagnostic check of density-matrix validity; never throws.
/// Unnormalized (conditional) states are only required to be Hermitian,
/// positive semidefinite and of nonnegative trace.
inline DensityReport validate_density(const DensityMatrix& rho, double tol = 1e-8) {
    DensityReport r;
    r.herm_defect = herm_defect(rho.mat);
    r.hermitian_ok = r.herm_defect < std::max(tol, 1e-12);
    r.trace = rho.mat.trace().real();
    if (rho.normalized) {
        r.trace_deviation = std::abs(r.trace - 1.0);
    } else {
        r.trace_deviation = r.trace < 0 ? -r.trace : 0.0;
    }
    r.trace_ok = r.trace_deviation <= tol;
    r.min_eigenvalue = min_eigenvalue(rho.mat);
    r.positive_ok = r.min_eigenvalue >= -tol;
    return r;
}

/// Replace rho by its Hermitian part; returns the defect before repair.
inline double symmetrize(Matrix& rho) {
    double defect = herm_defect(rho);
    rho = 0.5 * (rho + rho.adjoint()).eval();
    return defect;
}

}  // namespace cpcs
