#include "jetcrit/bounds.hpp"

#include "jetcrit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace jetcrit {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// Certified upper bound
// ---------------------------------------------------------------------------

namespace {

// Largest h in (0, 1] with psi(r) >= 1 - r/h on [0, 1].
double chord_bound(const FlowProfile& flow) {
    const int n = 8192;
    auto feasible = [&](double h) {
        for (int j = 0; j <= n; ++j) {
            const double r = static_cast<double>(j) / n;
            if (flow.psi(r) < 1.0 - r / h - 1e-12) return false;
        }
        return true;
    };
    if (feasible(1.0)) return 1.0;
    // Descend to the first feasible level, then bisect the boundary.
    double lo = 0.0, hi = 1.0;
    for (double h = 0.9; h > 0.005; h *= 0.9) {
        if (feasible(h)) {
            lo = h;
            break;
        }
        hi = h;
    }
    if (lo == 0.0) throw ChordBoundDegenerate("no chord level h > 0.01 validates for psi");
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (feasible(mid))
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

}  // namespace

UpperBoundResult upper_bound(const Model& model, double alpha) {
    if (!(alpha >= 10.0)) throw OutOfRange("upper_bound requires alpha >= 10");

    UpperBoundResult out;
    out.alpha = alpha;
    out.h = chord_bound(model.flow());

    const double cut = out.h * std::sqrt(alpha);
    QuadratureOptions opts;
    opts.rel_tol = 1e-12;
    out.j1 = integrate([](double y) { return -std::expm1(-0.5 * y * y) / y; }, 0.0, cut, opts)
                 .value;
    out.j2 = integrate([](double y) { return -std::expm1(-0.5 * y * y); }, 0.0, cut, opts).value /
             cut;

    if (out.j1 > out.j2) {
        out.lambda_ub = model.k() * alpha / (out.j1 - out.j2);
    } else {
        out.lambda_ub = kInf;
        out.degenerate = true;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sub-solution certificate
// ---------------------------------------------------------------------------

CertificateContext make_certificate_context(std::shared_ptr<const RadialGrid> grid) {
    if (!grid) throw GridMismatch("certificate context requires a grid");
    if (grid->oracle_mode())
        throw OutOfRange("certificates are defined for alpha > 0 only");
    const int N = grid->cell_count();

    CertificateContext ctx;
    ctx.grid = grid;
    ctx.load.resize(N + 1);
    for (int i = 0; i <= N; ++i)
        ctx.load[i] = grid->psi_a[i] + grid->m_a[i] * grid->m_a[i] / grid->alpha;

    const DiscreteOperator op = assemble(grid);
    ctx.z = op.solve(ctx.load, Vector::Zero(N + 1));

    for (int i = 0; i < N; ++i)
        if (ctx.z[i + 1] > ctx.z[i] + 1e-12 * (1.0 + ctx.z[0]))
            throw NumericalError("comparison response is not decreasing");

    // Flux reconstruction of the derivative: -(y w z') = ∫_0^y s w load ds,
    // accumulated in log space cell by cell.
    const FlowProfile& flow = grid->model->flow();
    const double de = grid->domain_end;
    ctx.zprime = Vector::Zero(N + 1);
    double log_flux = -kInf;
    for (int i = 1; i <= N; ++i) {
        auto loadfun = [&](double yy) {
            const double r = std::clamp(yy / de, 0.0, 1.0);
            const double m = flow.ratio_max(r);
            return flow.psi(r) + m * m / grid->alpha;
        };
        log_flux = logsumexp(log_flux, grid->cell_weighted_log_integral(i - 1, loadfun));
        ctx.zprime[i] = -std::exp(log_flux - grid->log_w[i] - std::log(grid->y[i]));
    }
    return ctx;
}

namespace {

struct BetaScan {
    double beta_max = 0.0;        // positivity ceiling (K - eps_w)/z(0)
    std::vector<double> betas;    // descending candidates
    std::vector<double> lam_max;  // largest feasible load at each beta
};

// For each beta the pointwise inequality is linear in lambda, so the scan
// reduces to the largest feasible lambda per beta.
BetaScan scan_betas(const Model& model, const CertificateContext& ctx, double eps_w) {
    const Nonlinearity& nl = model.nonlinearity();
    const RadialGrid& grid = *ctx.grid;
    const int N = grid.cell_count();
    const double k = model.k();

    BetaScan scan;
    scan.beta_max = (k - eps_w) / ctx.z[0];
    if (!(scan.beta_max > 0.0)) return scan;

    const int nb = 96;
    for (int b = 0; b < nb; ++b) {
        const double beta = scan.beta_max * std::pow(10.0, -3.0 * b / (nb - 1));
        double lam_load = kInf;
        bool ok = true;
        for (int i = 0; i <= N && ok; ++i) {
            const double gt = std::clamp(k - beta * ctx.z[i], 1e-300, k);
            const double fp = nl.deriv(nl.g_inverse(gt));
            const double avail =
                beta * ctx.load[i] - beta * beta * ctx.zprime[i] * ctx.zprime[i] * fp;
            const double psi = grid.psi_a[i];
            if (psi > 1e-300) {
                lam_load = std::min(lam_load, avail / psi);
                if (lam_load <= 0.0) ok = false;
            } else if (avail < 0.0) {
                ok = false;
            }
        }
        scan.betas.push_back(beta);
        scan.lam_max.push_back(ok ? lam_load : -kInf);
    }
    return scan;
}

}  // namespace

CertificateResult subsolution_certificate(const Model& model, double alpha, double lambda,
                                          double w, const CertificateContext& ctx) {
    if (!ctx.grid || ctx.grid->alpha != alpha)
        throw GridMismatch("certificate context does not match alpha");
    if (!(w > 0.0)) throw OutOfRange("certificate requires w > 0");
    if (!(lambda > 0.0)) throw OutOfRange("certificate requires lambda > 0");

    const Nonlinearity& nl = model.nonlinearity();
    const double k = model.k();

    CertificateResult out;
    out.w = w;
    out.epsilon_w = nl.g_fast(w);
    out.beta_asymptotic_c1 = 2.0 * (k - out.epsilon_w) / (std::log(alpha) + 1.0);

    const BetaScan scan = scan_betas(model, ctx, out.epsilon_w);
    if (scan.betas.empty()) {
        out.fail_reason = "positivity floor leaves no feasible load level";
        return out;
    }

    const double lam_load = ctx.grid->load_scale(lambda);
    double best_margin = -kInf;
    double best_beta = 0.0;
    for (std::size_t b = 0; b < scan.betas.size(); ++b) {
        const double margin = scan.lam_max[b] - lam_load;
        if (margin > best_margin) {
            best_margin = margin;
            best_beta = scan.betas[b];
        }
    }
    out.margin = best_margin;
    if (best_margin < 0.0) {
        out.fail_reason = "no load level satisfies the pointwise inequality at this lambda";
        return out;
    }

    out.pass = true;
    out.beta = best_beta;
    out.witness = (k - best_beta * ctx.z.array()).matrix();
    return out;
}

double verify_certificate(const Model& model, double lambda, double w, double beta,
                          const CertificateContext& ctx) {
    const Nonlinearity& nl = model.nonlinearity();
    const RadialGrid& grid = *ctx.grid;
    const int N = grid.cell_count();
    const double k = model.k();
    const double eps_w = nl.g_fast(w);
    const double lam_load = grid.load_scale(lambda);

    double margin = k - beta * ctx.z[0] - eps_w;  // condition (i)
    for (int i = 0; i < N; ++i) {                 // condition (ii)
        const double rise = (k - beta * ctx.z[i + 1]) - (k - beta * ctx.z[i]);
        margin = std::min(margin, rise + 1e-12 * k);
    }
    for (int i = 0; i <= N; ++i) {  // condition (iii)
        const double gt = std::clamp(k - beta * ctx.z[i], 1e-300, k);
        const double fp = nl.deriv(nl.g_inverse(gt));
        margin = std::min(margin, beta * ctx.load[i] - lam_load * grid.psi_a[i] -
                                      beta * beta * ctx.zprime[i] * ctx.zprime[i] * fp);
    }
    return margin;
}

std::vector<double> default_w_scan(double alpha) {
    const double ll = std::log(std::log(alpha));
    std::vector<double> ws;
    if (ll > 0.0) {
        ws.push_back(0.5 * ll);
        ws.push_back(ll);
        ws.push_back(2.0 * ll);
    }
    ws.push_back(1.0);
    ws.push_back(2.0);
    ws.push_back(4.0);
    return ws;
}

LowerBoundResult heuristic_lower_bound(const Model& model, double alpha,
                                       const CertificateContext& ctx,
                                       std::vector<double> w_scan) {
    if (!(alpha >= 100.0)) throw OutOfRange("heuristic_lower_bound requires alpha >= 100");
    if (w_scan.empty()) w_scan = default_w_scan(alpha);

    const Nonlinearity& nl = model.nonlinearity();
    const double k = model.k();
    LowerBoundResult out;

    for (double w : w_scan) {
        const double eps_w = nl.g_fast(w);
        const BetaScan scan = scan_betas(model, ctx, eps_w);
        double lam_best = 0.0, beta_best = 0.0;
        for (std::size_t b = 0; b < scan.betas.size(); ++b) {
            if (scan.lam_max[b] > lam_best) {
                lam_best = scan.lam_max[b];
                beta_best = scan.betas[b];
            }
        }
        const double lambda_w = std::max(0.0, lam_best) * alpha;
        out.per_w.push_back({w, lambda_w});
        if (lambda_w > out.lambda_lb) {
            out.lambda_lb = lambda_w;
            out.w_best = w;
            out.beta_best = beta_best;
            out.epsilon_w_best = eps_w;
            out.any_pass = true;
        }
    }

    // Asymptotic counterpart with its unspecified constant set to 1; reported
    // for qualitative comparison only.
    const double la = std::log(alpha);
    double best_formula = 0.0;
    for (double w : w_scan) {
        const double eps_w = nl.g_fast(w);
        const double val =
            2.0 * k * alpha / la * (1.0 - eps_w / k - (nl.deriv(w) + 1.0) / la);
        best_formula = std::max(best_formula, val);
    }
    out.lambda_lb_asymptotic_c1 = best_formula;
    return out;
}

// ---------------------------------------------------------------------------
// Scalar roots
// ---------------------------------------------------------------------------

double theta_star(const Model& model, double alpha, double c) {
    if (!(c > 0.0)) throw OutOfRange("theta_star requires c > 0");
    const Nonlinearity& nl = model.nonlinearity();
    const double target = c * std::log(alpha);
    if (!(target > 0.0)) throw NoRoot("c log alpha must be positive");

    // Descending scan in log theta from the solver blow-up cap.
    const double hi = std::max(nl.g_inverse(1e-8 * nl.k()), 10.0);
    const double lo = 1e-8;
    auto gap = [&](double u) {
        const double th = std::exp(u);
        return nl.value(th) / th - target;
    };
    const auto root = largest_root_scan(gap, std::log(lo), std::log(hi), 8192, 1e-9 * target);
    if (!root) throw NoRoot("f(theta)/theta never reaches c log alpha");
    return std::exp(*root);
}

double capacity_a(const Model& model, double alpha, double c) {
    if (!(c > 0.0)) throw OutOfRange("capacity requires c > 0");
    const Nonlinearity& nl = model.nonlinearity();
    const double target = c * std::log(alpha);

    double hi = 1.0;
    for (int it = 0; it < 1100 && nl.deriv(hi) < target; ++it) {
        hi *= 2.0;
        if (hi > 1e305) throw DerivativeBounded("f' never reaches c log alpha");
    }
    if (nl.deriv(hi) < target) throw DerivativeBounded("f' never reaches c log alpha");
    if (nl.deriv(0.0) >= target) return 0.0;
    RootOptions opts;
    opts.x_tol_rel = 1e-14;
    return bracket_root([&](double a) { return nl.deriv(a) - target; }, 0.0, hi, opts);
}

// ---------------------------------------------------------------------------
// Growth hypothesis
// ---------------------------------------------------------------------------

bool growth_hypothesis_single(const Nonlinearity& nl, double c0, double c1, double t0) {
    // Lattice cap where f stays far from overflow.
    double tmax = t0;
    while (tmax < 1e6 * t0 && nl.value(tmax * 1.3) < 1e250) tmax *= 1.3;
    const int n = 128;
    std::vector<double> t(n), f(n), fp(n);
    for (int j = 0; j < n; ++j) {
        t[j] = t0 * std::exp(std::log(tmax / t0) * j / (n - 1.0));
        f[j] = nl.value(t[j]);
        fp[j] = nl.deriv(t[j]);
    }
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (f[j] >= c1 * f[i] && (1.0 - c0) * fp[j] < fp[i] * (1.0 - 1e-12)) return false;
    return true;
}

HypothesisVerdicts check_growth_hypothesis(const Model& model) {
    const Nonlinearity& nl = model.nonlinearity();
    HypothesisVerdicts out;

    const double c1s[] = {4.0, 2.0, 8.0};
    const double c0s[] = {1.0 / 3.0, 0.5, 0.25, 0.125, 1.0 / 16.0};
    for (double t0 : {1.0, 4.0, 16.0}) {
        for (double c1 : c1s)
            for (double c0 : c0s)
                if (!out.direct_pass && growth_hypothesis_single(nl, c0, c1, t0)) {
                    out.direct_pass = true;
                    out.c0 = c0;
                    out.c1 = c1;
                    out.t0 = t0;
                }
        if (out.direct_pass) break;
    }

    if (!nl.has_second_deriv()) {
        out.curvature_route = RouteVerdict::NotApplicable;
        return out;
    }
    bool ok = true;
    double prev = -kInf;
    for (int j = 0; j <= 200 && ok; ++j) {
        const double s = 1e-3 * std::pow(10.0, 5.0 * j / 200.0);
        const double fpp = *nl.second_deriv(s);
        if (!(fpp > 0.0) || fpp <= prev * (1.0 + 1e-12)) ok = false;
        prev = fpp;
    }
    out.curvature_route = ok ? RouteVerdict::Pass : RouteVerdict::Fail;
    return out;
}

ExpCaseReport exp_case_report(double alpha) {
    ExpCaseReport out;
    out.alpha = alpha;
    const double la = std::log(alpha);
    out.lambda_center = 2.0 * alpha / la;
    out.correction = 1.0 / std::sqrt(la);
    out.u_center_scale = std::log(la);
    return out;
}

// ---------------------------------------------------------------------------
// Report assembly
// ---------------------------------------------------------------------------

BoundsReport bounds_report(std::shared_ptr<const Model> model, double alpha,
                           const GridResolution& res) {
    BoundsReport rep;
    rep.alpha = alpha;
    rep.upper = upper_bound(*model, alpha);

    auto grid = build_grid(model, alpha, res);
    const CertificateContext ctx = make_certificate_context(grid);
    rep.lower = heuristic_lower_bound(*model, alpha, ctx);

    try {
        rep.theta_star_c1 = theta_star(*model, alpha, 1.0);
        rep.theta_star_within_quarter_power = *rep.theta_star_c1 <= std::pow(alpha, 0.25);
    } catch (const NoRoot&) {
        rep.theta_star_c1.reset();
    }
    try {
        rep.capacity_c1 = capacity_a(*model, alpha, 1.0);
    } catch (const DerivativeBounded&) {
        rep.capacity_c1.reset();
    }
    rep.hypothesis = check_growth_hypothesis(*model);
    return rep;
}

nlohmann::json BoundsReport::to_json() const {
    nlohmann::json j;
    j["alpha"] = alpha;
    j["lambda_ub"] = upper.degenerate ? nlohmann::json() : nlohmann::json(upper.lambda_ub);
    j["lambda_ub_degenerate"] = upper.degenerate;
    j["h"] = upper.h;
    j["j1"] = upper.j1;
    j["j2"] = upper.j2;
    j["lambda_lb"] = lower.lambda_lb;
    j["lambda_lb_any_pass"] = lower.any_pass;
    j["w_best"] = lower.w_best;
    j["beta_best"] = lower.beta_best;
    j["epsilon_w_best"] = lower.epsilon_w_best;
    nlohmann::json per_w = nlohmann::json::array();
    for (const auto& [w, lam] : lower.per_w) per_w.push_back({{"w", w}, {"lambda", lam}});
    j["certified_per_w"] = per_w;
    j["lambda_lb_formula_c1_nonrigorous"] = lower.lambda_lb_asymptotic_c1;
    if (theta_star_c1) {
        j["theta_star"] = *theta_star_c1;
        j["theta_star_within_quarter_power"] = theta_star_within_quarter_power;
    } else {
        j["theta_star"] = nullptr;
    }
    j["capacity"] = capacity_c1 ? nlohmann::json(*capacity_c1) : nlohmann::json();
    auto route = [](RouteVerdict v) {
        switch (v) {
            case RouteVerdict::Pass:
                return "pass";
            case RouteVerdict::Fail:
                return "fail";
            default:
                return "not_applicable";
        }
    };
    j["growth_hypothesis"] = {{"direct", hypothesis.direct_pass ? "pass" : "fail"},
                              {"c0", hypothesis.c0},
                              {"c1", hypothesis.c1},
                              {"t0", hypothesis.t0},
                              {"curvature", route(hypothesis.curvature_route)}};
    return j;
}

}  // namespace jetcrit
