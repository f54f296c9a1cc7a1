#pragma once

#include <Eigen/Core>

#include <functional>
#include <optional>

namespace jetcrit {

using Vector = Eigen::VectorXd;
using Array = Eigen::ArrayXd;

using ScalarFn = std::function<double(double)>;

struct QuadratureOptions {
    double abs_tol = 0.0;
    double rel_tol = 1e-12;
    int max_depth = 52;
};

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
    int panels = 0;
};

/// Adaptive Gauss-Kronrod 7/15 on a finite interval.
/// Throws NonFiniteSample on NaN/Inf integrand values and ToleranceNotMet
/// when the local error cannot be driven below tolerance within max_depth.
QuadratureResult integrate(const ScalarFn& f, double a, double b,
                           const QuadratureOptions& opts = {});

/// ∫_a^∞ f via the substitution s = a + t/(1-t) onto [0,1).
QuadratureResult integrate_to_infinity(const ScalarFn& f, double a,
                                       const QuadratureOptions& opts = {});

struct RootOptions {
    double x_tol_rel = 1e-13;
    double f_tol = 0.0;
    int max_iter = 200;
};

/// Root of g on [lo, hi] with g(lo)·g(hi) <= 0; bisection refined by a
/// safeguarded secant step. Throws NoSignChange otherwise (tangential roots
/// are not found by this routine).
double bracket_root(const ScalarFn& g, double lo, double hi,
                    const RootOptions& opts = {});

/// Largest root of g on [lo, hi] located by a descending dense scan.
/// A sign change is refined by bracket_root; a near-tangential touch
/// (minimum of |g| below tangent_tol) resolves to the refined argmin.
/// Returns nullopt when no root is detected.
std::optional<double> largest_root_scan(const ScalarFn& g, double lo, double hi,
                                        int samples, double tangent_tol,
                                        const RootOptions& opts = {});

struct TridiagonalSystem {
    Vector sub;    // length n-1
    Vector diag;   // length n
    Vector super;  // length n-1
    Vector rhs;    // length n
};

/// Thomas solve without pivoting. Throws SingularPivot on (near-)zero pivots.
Vector solve_tridiagonal(const TridiagonalSystem& sys);

struct SymTridiagEigen {
    double value = 0.0;
    Vector vector;
    int iterations = 0;
    double residual = 0.0;  // ||T x - value x||_inf / ||T||_inf
};

/// k-th smallest eigenvalue (k zero-based) of the symmetric tridiagonal
/// matrix (diag, off) by Sturm-sequence bisection, eigenvector by shifted
/// inverse iteration.
SymTridiagEigen sym_tridiag_eigen(const Vector& diag, const Vector& off, int k,
                                  bool want_vector = true);

/// log(e^a + e^b) without overflow.
double logsumexp(double a, double b);

}  // namespace jetcrit
