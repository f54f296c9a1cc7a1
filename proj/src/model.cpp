#include "jetcrit/model.hpp"

#include "jetcrit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>

namespace jetcrit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct CubicHermite {
    std::vector<double> x, y, d;

    double eval(double t) const {
        if (t <= x.front()) return y.front() + d.front() * (t - x.front());
        if (t >= x.back()) return y.back() + d.back() * (t - x.back());
        const auto it = std::upper_bound(x.begin(), x.end(), t);
        const std::size_t j = static_cast<std::size_t>(it - x.begin()) - 1;
        const double h = x[j + 1] - x[j];
        const double u = (t - x[j]) / h;
        const double u2 = u * u, u3 = u2 * u;
        return y[j] * (2 * u3 - 3 * u2 + 1) + y[j + 1] * (-2 * u3 + 3 * u2) +
               d[j] * h * (u3 - 2 * u2 + u) + d[j + 1] * h * (u3 - u2);
    }
};

// Monotonicity-preserving slopes (Fritsch-Carlson) for sampled data.
std::vector<double> fritsch_carlson_slopes(const std::vector<double>& x,
                                           const std::vector<double>& y) {
    const std::size_t n = x.size();
    std::vector<double> delta(n - 1), d(n);
    for (std::size_t i = 0; i + 1 < n; ++i) delta[i] = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
    d[0] = delta[0];
    d[n - 1] = delta[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (delta[i - 1] * delta[i] <= 0.0)
            d[i] = 0.0;
        else {
            const double w1 = 2 * (x[i + 1] - x[i]) + (x[i] - x[i - 1]);
            const double w2 = (x[i + 1] - x[i]) + 2 * (x[i] - x[i - 1]);
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (delta[i] == 0.0) {
            d[i] = 0.0;
            d[i + 1] = 0.0;
            continue;
        }
        const double a = d[i] / delta[i];
        const double b = d[i + 1] / delta[i];
        const double s = a * a + b * b;
        if (s > 9.0) {
            const double tau = 3.0 / std::sqrt(s);
            d[i] = tau * a * delta[i];
            d[i + 1] = tau * b * delta[i];
        }
    }
    return d;
}

constexpr int kScanSize = 65536;

}  // namespace

// ---------------------------------------------------------------------------
// Nonlinearity
// ---------------------------------------------------------------------------

struct Nonlinearity::Cache {
    double k = 0.0;
    double v_max = 0.0;
    CubicHermite g_table;  // g decreasing, exact slopes -1/f
};

struct Nonlinearity::CustomInterp {
    CubicHermite f, fp, fpp;
    bool has_fpp = false;
};

Nonlinearity Nonlinearity::exponential() {
    Nonlinearity nl;
    nl.kind_ = NonlinearityKind::Exponential;
    nl.cache_once_ = std::make_shared<std::once_flag>();
    nl.validate();
    return nl;
}

Nonlinearity Nonlinearity::power(double p) {
    if (!(p > 1.0)) throw InvalidModel("power nonlinearity requires p > 1");
    Nonlinearity nl;
    nl.kind_ = NonlinearityKind::Power;
    nl.power_p_ = p;
    nl.cache_once_ = std::make_shared<std::once_flag>();
    nl.validate();
    return nl;
}

Nonlinearity Nonlinearity::custom(CustomNonlinearityData data) {
    const std::size_t n = data.s.size();
    if (n < 4) throw InvalidModel("custom nonlinearity needs at least 4 samples");
    if (data.f.size() != n || data.fprime.size() != n)
        throw InvalidModel("custom nonlinearity sample arrays must have equal length");
    if (!data.fsecond.empty() && data.fsecond.size() != n)
        throw InvalidModel("custom nonlinearity curvature samples must match the grid");
    if (data.s.front() != 0.0) throw InvalidModel("custom nonlinearity samples must start at 0");
    for (std::size_t i = 0; i + 1 < n; ++i)
        if (!(data.s[i + 1] > data.s[i])) throw InvalidModel("custom sample grid must increase");
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(data.f[i]) || !std::isfinite(data.fprime[i]))
            throw InvalidModel("custom nonlinearity samples must be finite");
        if (data.fprime[i] < 0.0) throw InvalidModel("custom nonlinearity derivative must be >= 0");
    }
    Nonlinearity nl;
    nl.kind_ = NonlinearityKind::Custom;
    nl.data_ = std::move(data);
    nl.cache_once_ = std::make_shared<std::once_flag>();

    auto make_interp = [](const std::vector<double>& x, const std::vector<double>& y) {
        CubicHermite h;
        h.x = x;
        h.y = y;
        h.d = fritsch_carlson_slopes(x, y);
        return h;
    };
    auto interp = std::make_shared<CustomInterp>();
    interp->f = make_interp(nl.data_.s, nl.data_.f);
    interp->fp = make_interp(nl.data_.s, nl.data_.fprime);
    if (!nl.data_.fsecond.empty()) {
        interp->fpp = make_interp(nl.data_.s, nl.data_.fsecond);
        interp->has_fpp = true;
    }
    nl.interp_ = std::move(interp);

    nl.validate();
    return nl;
}

double Nonlinearity::value(double s) const {
    switch (kind_) {
        case NonlinearityKind::Exponential:
            return std::exp(s);
        case NonlinearityKind::Power:
            return std::pow(1.0 + s, power_p_);
        case NonlinearityKind::Custom: {
            const double sn = data_.s.back();
            if (s > sn) return data_.f.back() * std::pow(s / sn, data_.tail_exponent);
            return interp_->f.eval(s);
        }
    }
    return 0.0;
}

double Nonlinearity::deriv(double s) const {
    switch (kind_) {
        case NonlinearityKind::Exponential:
            return std::exp(s);
        case NonlinearityKind::Power:
            return power_p_ * std::pow(1.0 + s, power_p_ - 1.0);
        case NonlinearityKind::Custom: {
            const double sn = data_.s.back();
            if (s > sn) return data_.tail_exponent * value(s) / s;
            return std::max(0.0, interp_->fp.eval(s));
        }
    }
    return 0.0;
}

std::optional<double> Nonlinearity::second_deriv(double s) const {
    switch (kind_) {
        case NonlinearityKind::Exponential:
            return std::exp(s);
        case NonlinearityKind::Power:
            return power_p_ * (power_p_ - 1.0) * std::pow(1.0 + s, power_p_ - 2.0);
        case NonlinearityKind::Custom: {
            if (!interp_->has_fpp) return std::nullopt;
            const double sn = data_.s.back();
            const double q = data_.tail_exponent;
            if (s > sn) return q * (q - 1.0) * value(s) / (s * s);
            return interp_->fpp.eval(s);
        }
    }
    return std::nullopt;
}

bool Nonlinearity::has_second_deriv() const {
    return kind_ != NonlinearityKind::Custom || !data_.fsecond.empty();
}

void Nonlinearity::validate() const {
    if (!(value(0.0) > 0.0)) throw InvalidModel("nonlinearity must satisfy f(0) > 0");

    const double pmax = kind_ == NonlinearityKind::Custom ? data_.s.back() : 50.0;
    // Monotonicity probe on a log-spaced grid.
    double prev = value(0.0);
    for (int j = 1; j <= 256; ++j) {
        const double s = pmax * std::pow(10.0, -4.0 + 4.0 * j / 256.0);
        const double fs = value(s);
        if (!(fs > 0.0) || !std::isfinite(fs))
            throw InvalidModel("nonlinearity must be positive and finite on its range");
        if (fs < prev * (1.0 - 1e-9)) throw InvalidModel("nonlinearity must be non-decreasing");
        prev = fs;
    }
    // Convexity probe by second differences on a uniform grid.
    const double h = pmax / 128.0;
    for (int j = 1; j < 128; ++j) {
        const double s = j * h;
        const double dd = value(s - h) + value(s + h) - 2.0 * value(s);
        if (dd < -1e-7 * (std::abs(value(s)) + 1.0))
            throw InvalidModel("nonlinearity must be convex");
    }
}

double Nonlinearity::tail_g(double v) const {
    switch (kind_) {
        case NonlinearityKind::Exponential:
            return std::exp(-v);
        case NonlinearityKind::Power:
            return std::pow(1.0 + v, 1.0 - power_p_) / (power_p_ - 1.0);
        case NonlinearityKind::Custom: {
            const double sn = data_.s.back();
            const double fn = data_.f.back();
            const double q = data_.tail_exponent;
            return sn / (fn * (q - 1.0)) * std::pow(v / sn, 1.0 - q);
        }
    }
    return 0.0;
}

double Nonlinearity::tail_g_inverse(double gval) const {
    switch (kind_) {
        case NonlinearityKind::Exponential:
            return -std::log(gval);
        case NonlinearityKind::Power:
            return std::pow(gval * (power_p_ - 1.0), 1.0 / (1.0 - power_p_)) - 1.0;
        case NonlinearityKind::Custom: {
            const double sn = data_.s.back();
            const double fn = data_.f.back();
            const double q = data_.tail_exponent;
            return sn * std::pow(gval * fn * (q - 1.0) / sn, 1.0 / (1.0 - q));
        }
    }
    return 0.0;
}

void Nonlinearity::ensure_cache() const {
    std::call_once(*cache_once_, [this] {
        if (kind_ == NonlinearityKind::Custom && !(data_.tail_exponent > 1.0))
            throw DivergentIntegral("custom tail exponent must exceed 1 for ∫ ds/f to converge");

        auto cache = std::make_shared<Cache>();
        auto recip = [this](double s) { return 1.0 / value(s); };

        // Rough mass: finite quadrature up to the point where the tail law is
        // exact, plus the closed-form remainder. The t/(1-t) substitution
        // cannot resolve slowly decaying tails to the required accuracy in
        // double precision, so the remainder is always taken in closed form.
        const double anchor =
            kind_ == NonlinearityKind::Custom ? std::max(2.0, data_.s.back() * 1.000001) : 2.0;
        QuadratureOptions rough;
        rough.rel_tol = 1e-9;
        double k_rough;
        try {
            k_rough = tail_g(anchor) + integrate(recip, 0.0, anchor, rough).value;
        } catch (const ToleranceNotMet&) {
            throw DivergentIntegral("reciprocal integral of the nonlinearity does not converge");
        }
        if (!std::isfinite(k_rough) || k_rough <= 0.0)
            throw DivergentIntegral("reciprocal integral of the nonlinearity does not converge");

        // The table covers [0, anchor]; past the anchor the declared tail law
        // is the exact remainder for every kind.
        const double v_max = anchor;
        cache->v_max = v_max;

        const int n = 6145;
        const double v_lo = std::min(1e-4, 1e-8 * v_max);
        std::vector<double> v;
        v.reserve(n + 64);
        v.push_back(0.0);
        for (int j = 1; j < n; ++j)
            v.push_back(std::exp(std::log(v_lo) +
                                 (std::log(v_max) - std::log(v_lo)) * (j - 1) / double(n - 2)));
        v.back() = v_max;
        if (kind_ == NonlinearityKind::Custom) {
            // Sample joints are curvature kinks of 1/f; keep them as table
            // nodes so every Hermite segment is smooth.
            for (double s : data_.s)
                if (s > 0.0 && s < v_max) v.push_back(s);
            std::sort(v.begin(), v.end());
            std::vector<double> dedup;
            for (double x : v)
                if (dedup.empty() || x > dedup.back() * (1.0 + 1e-12) + 1e-300)
                    dedup.push_back(x);
            dedup.back() = v_max;
            v = std::move(dedup);
        }
        const std::size_t m = v.size();

        QuadratureOptions seg;
        seg.rel_tol = 1e-13;
        seg.abs_tol = 1e-16 * k_rough;
        std::vector<double> g(m), d(m);
        g[m - 1] = tail_g(v_max);
        for (std::size_t j = m - 1; j-- > 0;)
            g[j] = g[j + 1] + integrate(recip, v[j], v[j + 1], seg).value;
        for (std::size_t j = 0; j < m; ++j) d[j] = -1.0 / value(v[j]);

        cache->k = g[0];
        cache->g_table.x = std::move(v);
        cache->g_table.y = std::move(g);
        cache->g_table.d = std::move(d);
        cache_ = std::move(cache);
    });
    if (!cache_) throw DivergentIntegral("nonlinearity cache construction failed previously");
}

double Nonlinearity::k() const {
    ensure_cache();
    return cache_->k;
}

double Nonlinearity::g(double v) const {
    if (v < 0.0) throw OutOfRange("g(v) requires v >= 0");
    ensure_cache();
    if (v >= cache_->v_max) return tail_g(v);
    auto recip = [this](double s) { return 1.0 / value(s); };
    QuadratureOptions opts;
    opts.rel_tol = 1e-12;
    opts.abs_tol = 1e-14 * cache_->k;

    // Integrate piecewise between the interpolation joints of the custom
    // kind; each piece is smooth, so the error estimates stay sharp.
    double acc = tail_g(cache_->v_max);
    double hi = cache_->v_max;
    if (kind_ == NonlinearityKind::Custom) {
        for (std::size_t j = data_.s.size(); j-- > 0;) {
            const double s = data_.s[j];
            if (s <= v || s >= hi) continue;
            acc += integrate(recip, s, hi, opts).value;
            hi = s;
        }
    }
    acc += integrate(recip, v, hi, opts).value;
    return acc;
}

double Nonlinearity::g_fast(double v) const {
    if (v < 0.0) throw OutOfRange("g(v) requires v >= 0");
    ensure_cache();
    if (v >= cache_->v_max) return tail_g(v);
    return cache_->g_table.eval(v);
}

double Nonlinearity::g_inverse(double gval) const {
    ensure_cache();
    const double k = cache_->k;
    if (gval <= 0.0 || gval > k * (1.0 + 1e-12))
        throw OutOfRange("g_inverse argument must lie in (0, k]");
    if (gval >= k) return 0.0;
    const auto& tab = cache_->g_table;
    if (gval <= tab.y.back()) return tail_g_inverse(gval);

    // Locate the table segment (g decreasing) and solve the cubic on it.
    std::size_t lo = 0, hi = tab.y.size() - 1;
    while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        if (tab.y[mid] >= gval)
            lo = mid;
        else
            hi = mid;
    }
    double a = tab.x[lo], b = tab.x[hi];
    double fa = tab.y[lo] - gval;
    for (int it = 0; it < 80 && (b - a) > 1e-15 * std::max(1.0, b); ++it) {
        const double mid = 0.5 * (a + b);
        const double fm = tab.eval(mid) - gval;
        if (fm == 0.0) return mid;
        if (fa * fm < 0.0)
            b = mid;
        else {
            a = mid;
            fa = fm;
        }
    }
    return 0.5 * (a + b);
}

nlohmann::json Nonlinearity::to_json() const {
    nlohmann::json j;
    switch (kind_) {
        case NonlinearityKind::Exponential:
            j["kind"] = "exp";
            break;
        case NonlinearityKind::Power:
            j["kind"] = "power";
            j["p"] = power_p_;
            break;
        case NonlinearityKind::Custom:
            j["kind"] = "custom";
            j["s"] = data_.s;
            j["f"] = data_.f;
            j["fprime"] = data_.fprime;
            if (!data_.fsecond.empty()) j["fsecond"] = data_.fsecond;
            j["tail_exponent"] = data_.tail_exponent;
            break;
    }
    return j;
}

// ---------------------------------------------------------------------------
// FlowProfile
// ---------------------------------------------------------------------------

FlowProfile::FlowProfile(PhiSpec phi, PsiSpec psi, double sc)
    : phi_(std::move(phi)), psi_(std::move(psi)), sc_(sc) {
    validate();
    build_ratio_table();

    auto mfun = [this](double s) { return ratio_max(s); };
    QuadratureOptions opts;
    opts.rel_tol = 1e-10;
    opts.max_depth = 50;
    try {
        m_ = integrate(mfun, 0.0, 1.0, opts).value;
    } catch (const ToleranceNotMet&) {
        throw InvalidModel("∫ M(s) ds does not converge for this flow profile");
    } catch (const NonFiniteSample&) {
        throw InvalidModel("∫ M(s) ds does not converge for this flow profile");
    }
}

double FlowProfile::phi(double r) const {
    switch (phi_.kind) {
        case PhiKind::Gaussian:
            return std::exp(-phi_.gauss_a * r * r);
        case PhiKind::Schlichting: {
            if (r >= 1.0) return 0.0;
            const double t = 1.0 - std::pow(r, 1.5);
            return t * t;
        }
        case PhiKind::Constant:
            return 1.0;
        case PhiKind::Custom: {
            const auto& d = phi_.data;
            if (r <= 0.0) return d.values.front();
            if (r >= 1.0) return d.values.back();
            const auto it = std::upper_bound(d.r.begin(), d.r.end(), r);
            const std::size_t j = static_cast<std::size_t>(it - d.r.begin()) - 1;
            const double t = (r - d.r[j]) / (d.r[j + 1] - d.r[j]);
            return d.values[j] + t * (d.values[j + 1] - d.values[j]);
        }
    }
    return 1.0;
}

double FlowProfile::log_phi(double r) const {
    switch (phi_.kind) {
        case PhiKind::Gaussian:
            return -phi_.gauss_a * r * r;
        case PhiKind::Schlichting: {
            if (r >= 1.0) return -kInf;
            return 2.0 * std::log1p(-std::pow(r, 1.5));
        }
        case PhiKind::Constant:
            return 0.0;
        case PhiKind::Custom: {
            const double p = phi(r);
            return p > 0.0 ? std::log(p) : -kInf;
        }
    }
    return 0.0;
}

double FlowProfile::psi(double r) const {
    switch (psi_.kind) {
        case PsiKind::PowerOfPhi: {
            const double lp = log_phi(r);
            return lp == -kInf ? 0.0 : std::exp(2.0 * sc_ * lp);
        }
        case PsiKind::Constant:
            return 1.0;
        case PsiKind::Custom: {
            const auto& d = psi_.data;
            if (r <= 0.0) return d.values.front();
            if (r >= 1.0) return d.values.back();
            const auto it = std::upper_bound(d.r.begin(), d.r.end(), r);
            const std::size_t j = static_cast<std::size_t>(it - d.r.begin()) - 1;
            const double t = (r - d.r[j]) / (d.r[j + 1] - d.r[j]);
            return d.values[j] + t * (d.values[j + 1] - d.values[j]);
        }
    }
    return 1.0;
}

double FlowProfile::ratio(double r) const {
    if (psi_.kind == PsiKind::PowerOfPhi) {
        const double lp = log_phi(r);
        const double e = 2.0 * sc_ - 1.0;
        if (lp == -kInf) return e > 0.0 ? 0.0 : (e == 0.0 ? 1.0 : kInf);
        return std::exp(e * lp);
    }
    const double p = phi(r);
    const double q = psi(r);
    if (p <= 0.0) {
        if (q <= 1e-300) return 0.0;
        if (r < 1.0 - 2.0 / kScanSize)
            throw ProfileDegenerate("phi vanishes at an interior point with psi > 0");
        return kInf;
    }
    return q / p;
}

void FlowProfile::build_ratio_table() {
    ratio_prefix_max_.resize(kScanSize + 1);
    double running = 0.0;
    psi_vanishes_interior_ = false;
    const int refine = 16;
    for (int j = 0; j <= kScanSize; ++j) {
        const double r = static_cast<double>(j) / kScanSize;
        if (j > 0) {
            const double rprev = static_cast<double>(j - 1) / kScanSize;
            for (int q = 1; q < refine; ++q)
                running = std::max(running, ratio(rprev + (r - rprev) * q / refine));
        }
        running = std::max(running, ratio(r));
        ratio_prefix_max_[j] = running;
        if (j < kScanSize && psi(r) <= 1e-14 && r > 0.0) psi_vanishes_interior_ = true;
    }
}

double FlowProfile::ratio_max(double s) const {
    if (s <= 0.0) return ratio(0.0);
    if (s >= 1.0) return ratio_prefix_max_.back();
    const double pos = s * kScanSize;
    const int j = static_cast<int>(pos);
    double m = ratio_prefix_max_[j];
    const double rj = static_cast<double>(j) / kScanSize;
    for (int q = 1; q <= 16; ++q) m = std::max(m, ratio(rj + (s - rj) * q / 16.0));
    return m;
}

double FlowProfile::phi_cumulative(double r) const {
    r = std::clamp(r, 0.0, 1.0);
    switch (phi_.kind) {
        case PhiKind::Gaussian: {
            const double a = phi_.gauss_a;
            if (a == 0.0) return 0.5 * r * r;
            return -std::expm1(-a * r * r) / (2.0 * a);
        }
        case PhiKind::Schlichting:
            return 0.5 * r * r - (4.0 / 7.0) * std::pow(r, 3.5) + 0.2 * std::pow(r, 5.0);
        case PhiKind::Constant:
            return 0.5 * r * r;
        case PhiKind::Custom: {
            // Segment-exact integral of s * (piecewise-linear phi).
            const auto& d = phi_.data;
            auto segment = [&](std::size_t j, double from, double to) {
                const double c0 = d.values[j];
                const double c1 = (d.values[j + 1] - d.values[j]) / (d.r[j + 1] - d.r[j]);
                const double a = d.r[j];
                auto anti = [&](double t) {
                    return c0 * 0.5 * t * t + c1 * (t * t * t / 3.0 - a * 0.5 * t * t);
                };
                return anti(to) - anti(from);
            };
            double acc = 0.0;
            for (std::size_t j = 0; j + 1 < d.r.size(); ++j) {
                if (d.r[j + 1] <= r) {
                    acc += segment(j, d.r[j], d.r[j + 1]);
                } else {
                    if (r > d.r[j]) acc += segment(j, d.r[j], r);
                    break;
                }
            }
            return acc;
        }
    }
    return 0.0;
}

void FlowProfile::validate() const {
    if (!(sc_ > 0.0)) throw InvalidModel("Schlichting number must be positive");

    auto check_custom = [](const CustomProfileData& d, const char* which) {
        if (d.r.size() < 2 || d.values.size() != d.r.size())
            throw InvalidModel(std::string(which) + " custom profile needs matching sample arrays");
        if (d.r.front() != 0.0 || d.r.back() != 1.0)
            throw InvalidModel(std::string(which) + " custom profile must span [0, 1]");
        for (std::size_t i = 0; i + 1 < d.r.size(); ++i)
            if (!(d.r[i + 1] > d.r[i]))
                throw InvalidModel(std::string(which) + " custom profile grid must increase");
        for (double v : d.values)
            if (!std::isfinite(v) || v < 0.0)
                throw InvalidModel(std::string(which) + " custom profile values must be >= 0");
    };
    if (phi_.kind == PhiKind::Custom) check_custom(phi_.data, "phi");
    if (psi_.kind == PsiKind::Custom) check_custom(psi_.data, "psi");
    if (phi_.kind == PhiKind::Gaussian && phi_.gauss_a < 0.0)
        throw InvalidModel("gaussian profile requires a >= 0");

    if (std::abs(phi(0.0) - 1.0) > 1e-9) throw InvalidModel("phi(0) must equal 1");
    if (std::abs(psi(0.0) - 1.0) > 1e-9) throw InvalidModel("psi(0) must equal 1");

    double pprev = phi(0.0), qprev = psi(0.0);
    for (int j = 1; j <= 4096; ++j) {
        const double r = static_cast<double>(j) / 4096.0;
        const double p = phi(r), q = psi(r);
        if (p > pprev + 1e-12 || q > qprev + 1e-12)
            throw InvalidModel("flow profiles must be non-increasing");
        if (r < 1.0 && p <= 0.0) throw InvalidModel("phi must be positive on [0, 1)");
        pprev = p;
        qprev = q;
    }
}

nlohmann::json FlowProfile::to_json() const {
    nlohmann::json j;
    nlohmann::json p;
    switch (phi_.kind) {
        case PhiKind::Gaussian:
            p["kind"] = "gaussian";
            p["a"] = phi_.gauss_a;
            break;
        case PhiKind::Schlichting:
            p["kind"] = "schlichting";
            break;
        case PhiKind::Constant:
            p["kind"] = "const";
            break;
        case PhiKind::Custom:
            p["kind"] = "custom";
            p["r"] = phi_.data.r;
            p["values"] = phi_.data.values;
            break;
    }
    nlohmann::json q;
    switch (psi_.kind) {
        case PsiKind::PowerOfPhi:
            q["kind"] = "power_of_phi";
            break;
        case PsiKind::Constant:
            q["kind"] = "const";
            break;
        case PsiKind::Custom:
            q["kind"] = "custom";
            q["r"] = psi_.data.r;
            q["values"] = psi_.data.values;
            break;
    }
    j["phi"] = p;
    j["psi"] = q;
    j["sc"] = sc_;
    return j;
}

// ---------------------------------------------------------------------------
// Model + JSON
// ---------------------------------------------------------------------------

Model::Model(Nonlinearity nl, FlowProfile flow) : nl_(std::move(nl)), flow_(std::move(flow)) {
    k_ = nl_.k();  // forces the transform cache eagerly
}

namespace {

void expect_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                 const char* ctx) {
    if (!j.is_object()) throw ConfigError(std::string(ctx) + " must be a JSON object");
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* key : allowed)
            if (item.key() == key) ok = true;
        if (!ok) throw ConfigError("unknown key '" + item.key() + "' in " + ctx);
    }
}

std::vector<double> as_vector(const nlohmann::json& j, const char* ctx) {
    if (!j.is_array()) throw ConfigError(std::string(ctx) + " must be an array of numbers");
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& v : j) {
        if (!v.is_number()) throw ConfigError(std::string(ctx) + " must be an array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

Nonlinearity parse_nonlinearity(const nlohmann::json& j) {
    expect_keys(j, {"kind", "p", "s", "f", "fprime", "fsecond", "tail_exponent"}, "nonlinearity");
    if (!j.contains("kind")) throw ConfigError("nonlinearity requires a 'kind'");
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "exp") return Nonlinearity::exponential();
    if (kind == "power") {
        if (!j.contains("p")) throw ConfigError("power nonlinearity requires 'p'");
        return Nonlinearity::power(j.at("p").get<double>());
    }
    if (kind == "custom") {
        CustomNonlinearityData d;
        d.s = as_vector(j.at("s"), "nonlinearity.s");
        d.f = as_vector(j.at("f"), "nonlinearity.f");
        d.fprime = as_vector(j.at("fprime"), "nonlinearity.fprime");
        if (j.contains("fsecond")) d.fsecond = as_vector(j.at("fsecond"), "nonlinearity.fsecond");
        if (!j.contains("tail_exponent"))
            throw ConfigError("custom nonlinearity requires 'tail_exponent'");
        d.tail_exponent = j.at("tail_exponent").get<double>();
        return Nonlinearity::custom(std::move(d));
    }
    throw ConfigError("unknown nonlinearity kind '" + kind + "'");
}

PhiSpec parse_phi(const nlohmann::json& j) {
    expect_keys(j, {"kind", "a", "r", "values"}, "phi");
    if (!j.contains("kind")) throw ConfigError("phi requires a 'kind'");
    const std::string kind = j.at("kind").get<std::string>();
    PhiSpec spec;
    if (kind == "gaussian") {
        spec.kind = PhiKind::Gaussian;
        spec.gauss_a = j.contains("a") ? j.at("a").get<double>() : 4.0;
    } else if (kind == "schlichting") {
        spec.kind = PhiKind::Schlichting;
    } else if (kind == "const") {
        spec.kind = PhiKind::Constant;
    } else if (kind == "custom") {
        spec.kind = PhiKind::Custom;
        spec.data.r = as_vector(j.at("r"), "phi.r");
        spec.data.values = as_vector(j.at("values"), "phi.values");
    } else {
        throw ConfigError("unknown phi kind '" + kind + "'");
    }
    return spec;
}

PsiSpec parse_psi(const nlohmann::json& j) {
    expect_keys(j, {"kind", "r", "values"}, "psi");
    if (!j.contains("kind")) throw ConfigError("psi requires a 'kind'");
    const std::string kind = j.at("kind").get<std::string>();
    PsiSpec spec;
    if (kind == "power_of_phi") {
        spec.kind = PsiKind::PowerOfPhi;
    } else if (kind == "const") {
        spec.kind = PsiKind::Constant;
    } else if (kind == "custom") {
        spec.kind = PsiKind::Custom;
        spec.data.r = as_vector(j.at("r"), "psi.r");
        spec.data.values = as_vector(j.at("values"), "psi.values");
    } else {
        throw ConfigError("unknown psi kind '" + kind + "'");
    }
    return spec;
}

}  // namespace

Model Model::from_json(const nlohmann::json& j) {
    expect_keys(j, {"nonlinearity", "phi", "psi", "sc"}, "model");
    if (!j.contains("nonlinearity") || !j.contains("phi") || !j.contains("psi"))
        throw ConfigError("model requires 'nonlinearity', 'phi' and 'psi'");
    Nonlinearity nl = parse_nonlinearity(j.at("nonlinearity"));
    const double sc = j.contains("sc") ? j.at("sc").get<double>() : 0.75;
    FlowProfile flow(parse_phi(j.at("phi")), parse_psi(j.at("psi")), sc);
    return Model(std::move(nl), std::move(flow));
}

Model Model::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open model file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("model file " + path + " is not valid JSON: " + e.what());
    }
    return from_json(j);
}

nlohmann::json Model::to_json() const {
    nlohmann::json j = flow_.to_json();
    j["nonlinearity"] = nl_.to_json();
    return j;
}

double compute_k(const Nonlinearity& nl) { return nl.k(); }
double g_forward(const Nonlinearity& nl, double v) { return nl.g(v); }
double g_inverse(const Nonlinearity& nl, double gval) { return nl.g_inverse(gval); }
double ratio_max(const FlowProfile& flow, double s) { return flow.ratio_max(s); }
double ratio_max_integral(const FlowProfile& flow) { return flow.ratio_max_integral(); }

double log_advection_weight(const FlowProfile& flow, double alpha, double r) {
    if (alpha < 0.0) throw OutOfRange("advection weight requires alpha >= 0");
    return alpha * flow.phi_cumulative(r);
}

double advection_weight(const FlowProfile& flow, double alpha, double r) {
    return std::exp(log_advection_weight(flow, alpha, r));
}

}  // namespace jetcrit
