#include "oracles.hpp"

#include <cmath>
#include <stdexcept>

namespace oracles {

double midpoint_integral(const std::function<double(double)>& f, double a, double b,
                         long panels) {
    const double h = (b - a) / static_cast<double>(panels);
    double acc = 0.0;
    for (long j = 0; j < panels; ++j) acc += f(a + (j + 0.5) * h);
    return acc * h;
}

double bessel_j0_zero(int k) {
    double lo, hi;
    if (k == 1) {
        lo = 2.0;
        hi = 3.0;
    } else if (k == 2) {
        lo = 5.0;
        hi = 6.0;
    } else {
        throw std::invalid_argument("only the first two zeros are tabulated");
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (std::cyl_bessel_j(0.0, lo) * std::cyl_bessel_j(0.0, mid) <= 0.0)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

double disk_shoot_boundary(double a, double lambda) {
    // Series start off the axis removes the 1/r coordinate singularity.
    const double r0 = 1e-7;
    double u = a - 0.25 * lambda * std::exp(a) * r0 * r0;
    double p = -0.5 * lambda * std::exp(a) * r0;  // u'
    const long steps = 20000;
    const double h = (1.0 - r0) / steps;
    auto rhs = [lambda](double r, double uu, double pp, double& du, double& dp) {
        du = pp;
        dp = -pp / r - lambda * std::exp(uu);
    };
    double r = r0;
    for (long s = 0; s < steps; ++s) {
        double k1u, k1p, k2u, k2p, k3u, k3p, k4u, k4p;
        rhs(r, u, p, k1u, k1p);
        rhs(r + 0.5 * h, u + 0.5 * h * k1u, p + 0.5 * h * k1p, k2u, k2p);
        rhs(r + 0.5 * h, u + 0.5 * h * k2u, p + 0.5 * h * k2p, k3u, k3p);
        rhs(r + h, u + h * k3u, p + h * k3p, k4u, k4p);
        u += h / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u);
        p += h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p);
        r += h;
    }
    return u;
}

double disk_lambda_of_center(double a) {
    // u(1) is decreasing in lambda; bisect the boundary value to zero.
    double lo = 1e-12, hi = 20.0;
    if (disk_shoot_boundary(a, hi) > 0.0) throw std::runtime_error("shooting bracket failed");
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (disk_shoot_boundary(a, mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double disk_fold() {
    // Golden-section maximum of lambda(a) on a bracket around the fold.
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = 0.2, b = 5.0;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = disk_lambda_of_center(x1), f2 = disk_lambda_of_center(x2);
    for (int it = 0; it < 60; ++it) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = disk_lambda_of_center(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = disk_lambda_of_center(x1);
        }
    }
    return std::max(f1, f2);
}

double disk_minimal_center(double lambda) {
    // lambda(a) increases up to the fold; the smaller root is the minimal one.
    double lo = 1e-9, hi = 2.0 * std::log(2.0);
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (disk_lambda_of_center(mid) < lambda)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace oracles
