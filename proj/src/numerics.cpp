#include "jetcrit/numerics.hpp"

#include "jetcrit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace jetcrit {

namespace {

// Gauss-Kronrod 7/15 abscissae and weights on [-1, 1].
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};
constexpr double kWgk[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
constexpr double kWg[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

struct PanelEstimate {
    double integral;
    double error;
};

PanelEstimate gk15(const ScalarFn& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double hl = 0.5 * (b - a);

    double fc = f(c);
    if (!std::isfinite(fc)) throw NonFiniteSample("integrand not finite at " + std::to_string(c));
    double result_g = fc * kWg[3];
    double result_k = fc * kWgk[7];
    for (int j = 0; j < 7; ++j) {
        const double dx = hl * kXgk[j];
        const double f1 = f(c - dx);
        const double f2 = f(c + dx);
        if (!std::isfinite(f1) || !std::isfinite(f2))
            throw NonFiniteSample("integrand not finite near " + std::to_string(c));
        const double fsum = f1 + f2;
        result_k += fsum * kWgk[j];
        if (j % 2 == 1) result_g += fsum * kWg[j / 2];
    }
    result_g *= hl;
    result_k *= hl;

    double err = std::abs(result_k - result_g);
    // QUADPACK-style sharpening of the raw difference.
    if (err > 0.0) {
        const double scale = std::abs(result_k);
        if (scale > 0.0) err = std::min(err, err * std::sqrt(err / (scale + err)) + 1e-30);
    }
    return {result_k, err};
}

// Global-budget adaptive scheme: keep all panels, repeatedly split the one
// with the largest error estimate until the error sum meets the tolerance.
// Panels whose split no longer reduces the error (roundoff floor) are frozen.
QuadratureResult integrate_adaptive(const ScalarFn& f, double a, double b,
                                    const QuadratureOptions& opts) {
    struct Panel {
        double a, b;
        double value, error;
        int depth;
        bool frozen;
    };

    QuadratureResult out;
    if (a == b) return out;

    std::vector<Panel> panels;
    {
        const PanelEstimate e0 = gk15(f, a, b);
        panels.push_back({a, b, e0.integral, e0.error, 0, false});
        ++out.panels;
    }

    const int max_panels = 20000;
    while (static_cast<int>(panels.size()) < max_panels) {
        double total = 0.0, err = 0.0;
        int worst = -1;
        double worst_err = 0.0;
        for (int i = 0; i < static_cast<int>(panels.size()); ++i) {
            total += panels[i].value;
            err += panels[i].error;
            if (!panels[i].frozen && panels[i].error > worst_err) {
                worst_err = panels[i].error;
                worst = i;
            }
        }
        const double tol = std::max(opts.abs_tol, opts.rel_tol * std::abs(total));
        if (err <= std::max(tol, 1e-300)) {
            out.value = total;
            out.error_estimate = err;
            return out;
        }
        if (worst < 0)
            throw ToleranceNotMet("quadrature stalled at roundoff above the requested tolerance");

        Panel p = panels[worst];
        const double mid = 0.5 * (p.a + p.b);
        if (p.depth >= opts.max_depth || mid <= p.a || mid >= p.b) {
            panels[worst].frozen = true;
            continue;
        }
        const PanelEstimate el = gk15(f, p.a, mid);
        const PanelEstimate er = gk15(f, mid, p.b);
        out.panels += 2;
        Panel left = {p.a, mid, el.integral, el.error, p.depth + 1, false};
        Panel right = {mid, p.b, er.integral, er.error, p.depth + 1, false};
        // Split did not gain anything: the estimate is roundoff-dominated.
        if (el.error + er.error > 0.99 * p.error &&
            p.error < 1e-12 * (std::abs(p.value) + 1e-300)) {
            left.frozen = true;
            right.frozen = true;
        }
        panels[worst] = left;
        panels.push_back(right);
    }
    throw ToleranceNotMet("quadrature exceeded the panel budget");
}

}  // namespace

QuadratureResult integrate(const ScalarFn& f, double a, double b, const QuadratureOptions& opts) {
    return integrate_adaptive(f, a, b, opts);
}

QuadratureResult integrate_to_infinity(const ScalarFn& f, double a, const QuadratureOptions& opts) {
    // Samples whose back-transformed argument overflows sit beyond the
    // representable tail; for the integrable tails this routine is meant for,
    // the transformed integrand vanishes there.
    auto transformed = [&f, a](double t) {
        const double om = 1.0 - t;
        const double s = a + t / om;
        if (!std::isfinite(s)) return 0.0;
        const double val = f(s) / (om * om);
        return std::isfinite(val) ? val : 0.0;
    };
    return integrate_adaptive(transformed, 0.0, 1.0, opts);
}

double bracket_root(const ScalarFn& g, double lo, double hi, const RootOptions& opts) {
    if (lo > hi) std::swap(lo, hi);
    double flo = g(lo);
    double fhi = g(hi);
    if (!std::isfinite(flo) || !std::isfinite(fhi))
        throw NonFiniteSample("root bracket endpoint not finite");
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if (flo * fhi > 0.0) throw NoSignChange("no sign change on bracket");

    double x = lo;
    for (int it = 0; it < opts.max_iter; ++it) {
        const double width = hi - lo;
        // Secant proposal, safeguarded into the strict interior of the bracket.
        double cand = lo - flo * width / (fhi - flo);
        const double margin = 0.01 * width;
        if (!(cand > lo + margin && cand < hi - margin)) cand = 0.5 * (lo + hi);

        x = cand;
        const double fx = g(x);
        if (!std::isfinite(fx)) throw NonFiniteSample("root iterate not finite");
        if (std::abs(fx) <= opts.f_tol) return x;
        if (flo * fx < 0.0) {
            hi = x;
            fhi = fx;
        } else {
            lo = x;
            flo = fx;
        }
        if (hi - lo <= opts.x_tol_rel * std::max(1.0, std::abs(x))) return 0.5 * (lo + hi);
    }
    return 0.5 * (lo + hi);
}

namespace {

// Polishes the minimiser of |g| near x0 by ternary search.
double refine_abs_min(const ScalarFn& g, double x0, double step, double lo, double hi) {
    double a = std::max(lo, x0 - step), b = std::min(hi, x0 + step);
    for (int it = 0; it < 200 && (b - a) > 1e-14 * std::max(1.0, std::abs(x0)); ++it) {
        const double m1 = a + (b - a) / 3.0;
        const double m2 = b - (b - a) / 3.0;
        if (std::abs(g(m1)) < std::abs(g(m2)))
            b = m2;
        else
            a = m1;
    }
    return 0.5 * (a + b);
}

}  // namespace

std::optional<double> largest_root_scan(const ScalarFn& g, double lo, double hi, int samples,
                                        double tangent_tol, const RootOptions& opts) {
    samples = std::max(samples, 8);
    const double step = (hi - lo) / samples;
    double prev_x = hi;
    double prev_g = g(hi);
    double best_min = std::abs(prev_g);
    double best_x = hi;

    for (int k = 1; k <= samples; ++k) {
        const double x = hi + (lo - hi) * static_cast<double>(k) / samples;
        const double gx = g(x);
        if (!std::isfinite(gx)) throw NonFiniteSample("scan sample not finite");
        if (gx == 0.0) return x;
        if (gx * prev_g < 0.0) {
            // A tangential touch above this crossing would be the larger root.
            if (best_min <= 1e3 * tangent_tol) {
                const double xt = refine_abs_min(g, best_x, step, lo, hi);
                if (std::abs(g(xt)) <= tangent_tol && xt > x) return xt;
            }
            return bracket_root(g, x, prev_x, opts);
        }
        if (std::abs(gx) < best_min) {
            best_min = std::abs(gx);
            best_x = x;
        }
        prev_x = x;
        prev_g = gx;
    }

    // No sign change: the only candidate is a tangential touch at the scan
    // minimum, which the coarse scan resolves to O(step^2) of curvature.
    const double xt = refine_abs_min(g, best_x, step, lo, hi);
    if (std::abs(g(xt)) <= tangent_tol) return xt;
    return std::nullopt;
}

Vector solve_tridiagonal(const TridiagonalSystem& sys) {
    const Eigen::Index n = sys.diag.size();
    if (n < 2) throw NumericalError("tridiagonal system requires n >= 2");
    if (sys.sub.size() != n - 1 || sys.super.size() != n - 1 || sys.rhs.size() != n)
        throw NumericalError("tridiagonal system shape mismatch");

    const double scale = sys.diag.cwiseAbs().maxCoeff();
    const double pivot_floor = scale * 1e-300;

    Vector c(n - 1), d(n);
    double piv = sys.diag[0];
    if (std::abs(piv) <= pivot_floor) throw SingularPivot("zero pivot at row 0");
    c[0] = sys.super[0] / piv;
    d[0] = sys.rhs[0] / piv;
    for (Eigen::Index i = 1; i < n; ++i) {
        piv = sys.diag[i] - sys.sub[i - 1] * c[i - 1];
        if (std::abs(piv) <= pivot_floor)
            throw SingularPivot("zero pivot at row " + std::to_string(i));
        if (i < n - 1) c[i] = sys.super[i] / piv;
        d[i] = (sys.rhs[i] - sys.sub[i - 1] * d[i - 1]) / piv;
    }
    Vector x(n);
    x[n - 1] = d[n - 1];
    for (Eigen::Index i = n - 2; i >= 0; --i) x[i] = d[i] - c[i] * x[i + 1];
    return x;
}

namespace {

// Number of eigenvalues of (diag, off) strictly below sigma.
int sturm_count(const Vector& diag, const Vector& off, double sigma) {
    const Eigen::Index n = diag.size();
    int count = 0;
    double d = diag[0] - sigma;
    if (d < 0.0) ++count;
    for (Eigen::Index i = 1; i < n; ++i) {
        double denom = d;
        if (std::abs(denom) < 1e-300) denom = (denom < 0.0 ? -1e-300 : 1e-300);
        d = diag[i] - sigma - off[i - 1] * off[i - 1] / denom;
        if (d < 0.0) ++count;
    }
    return count;
}

}  // namespace

SymTridiagEigen sym_tridiag_eigen(const Vector& diag, const Vector& off, int k, bool want_vector) {
    const Eigen::Index n = diag.size();
    if (n < 1 || off.size() != n - 1) throw NumericalError("eigen problem shape mismatch");
    if (k < 0 || k >= n) throw NumericalError("eigenvalue index out of range");

    // Gershgorin bounds.
    double lo = diag[0], hi = diag[0];
    for (Eigen::Index i = 0; i < n; ++i) {
        double r = 0.0;
        if (i > 0) r += std::abs(off[i - 1]);
        if (i < n - 1) r += std::abs(off[i]);
        lo = std::min(lo, diag[i] - r);
        hi = std::max(hi, diag[i] + r);
    }
    const double span = std::max(hi - lo, 1e-300);
    lo -= 1e-12 * span;
    hi += 1e-12 * span;

    SymTridiagEigen out;
    int iters = 0;
    while (hi - lo > 1e-15 * span && iters < 200) {
        const double mid = 0.5 * (lo + hi);
        if (sturm_count(diag, off, mid) > k)
            hi = mid;
        else
            lo = mid;
        ++iters;
    }
    out.value = 0.5 * (lo + hi);
    out.iterations = iters;
    if (!want_vector || n == 1) {
        if (n == 1) out.vector = Vector::Ones(1);
        return out;
    }

    // Shifted inverse iteration with pivot perturbation near singularity.
    const double shift = out.value - 1e-11 * span;
    Vector x = Vector::Ones(n);
    x.normalize();
    const double tnorm = span;
    for (int it = 0; it < 8; ++it) {
        TridiagonalSystem sys;
        sys.sub = off;
        sys.super = off;
        sys.diag = diag.array() - shift;
        sys.rhs = x;
        // Thomas with tiny-pivot replacement.
        const Eigen::Index m = n;
        Vector c(m - 1), d(m);
        double piv = sys.diag[0];
        if (std::abs(piv) < 1e-14 * tnorm) piv = (piv < 0 ? -1.0 : 1.0) * 1e-14 * tnorm;
        c[0] = sys.super[0] / piv;
        d[0] = sys.rhs[0] / piv;
        for (Eigen::Index i = 1; i < m; ++i) {
            piv = sys.diag[i] - sys.sub[i - 1] * c[i - 1];
            if (std::abs(piv) < 1e-14 * tnorm) piv = (piv < 0 ? -1.0 : 1.0) * 1e-14 * tnorm;
            if (i < m - 1) c[i] = sys.super[i] / piv;
            d[i] = (sys.rhs[i] - sys.sub[i - 1] * d[i - 1]) / piv;
        }
        Vector y(m);
        y[m - 1] = d[m - 1];
        for (Eigen::Index i = m - 2; i >= 0; --i) y[i] = d[i] - c[i] * y[i + 1];

        y.normalize();
        x = y;
        ++out.iterations;

        // Residual in the infinity norm.
        double rmax = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            double r = (diag[i] - out.value) * x[i];
            if (i > 0) r += off[i - 1] * x[i - 1];
            if (i < n - 1) r += off[i] * x[i + 1];
            rmax = std::max(rmax, std::abs(r));
        }
        out.residual = rmax / tnorm;
        if (out.residual < 1e-12) break;
    }
    // Fix overall sign: make the largest-magnitude entry positive.
    Eigen::Index imax;
    x.cwiseAbs().maxCoeff(&imax);
    if (x[imax] < 0.0) x = -x;
    out.vector = x;
    return out;
}

double logsumexp(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace jetcrit
