#include "jetcrit/criticality.hpp"

#include "jetcrit/errors.hpp"
#include "jetcrit/stability.hpp"

#include <algorithm>
#include <cmath>

namespace jetcrit {

namespace {

struct Classifier {
    const Model& model;
    double alpha;
    std::shared_ptr<const RadialGrid> grid;
    const SolveOptions& base;
    std::vector<BisectionStep>* log;
    int* inconclusive_count;

    SolveOutcome run(double lambda, const std::optional<Vector>& warm, bool newton_ok,
                     int budget_factor = 1) const {
        SolveOptions opts = base;
        opts.newton_enabled = base.newton_enabled && newton_ok;
        opts.max_outer = base.max_outer * budget_factor;
        if (warm) opts.warm_start = warm;
        return minimal_solution(model, alpha, lambda, grid, opts);
    }

    // A midpoint that resists classification is retried cold with a larger
    // budget; a leftover Inconclusive is treated as the non-existence side
    // but counted, and the final bracket ends on a verified blow-up.
    SolveOutcome classify(double lambda, const std::optional<Vector>& warm, bool newton_ok,
                          bool cold) const {
        SolveOutcome out = run(lambda, cold ? std::nullopt : warm, newton_ok);
        if (out.status == SolveStatus::Inconclusive) {
            out = run(lambda, std::nullopt, true, 4);
            if (out.status == SolveStatus::Inconclusive) ++(*inconclusive_count);
        }
        if (log)
            log->push_back({lambda, out.status, out.diagnostics.outer_iterations,
                            out.diagnostics.center_value, out.diagnostics.final_residual, cold});
        return out;
    }
};

}  // namespace

LambdaStarResult find_lambda_star(std::shared_ptr<const Model> model, double alpha,
                                  const CriticalOptions& opts) {
    if (!model) throw ConfigError("find_lambda_star requires a model");

    LambdaStarResult res;
    res.alpha = alpha;
    res.experimental_flow = model->flow().psi_vanishes_interior();

    auto grid = build_grid(model, alpha, opts.resolution);
    Classifier cls{*model, alpha, grid, opts.solve, &res.log, &res.inconclusive_count};

    // Seed bracket: certified bounds where they exist, a broad classical
    // window otherwise.
    double lo, hi;
    double expand_cap;
    if (opts.seed) {
        lo = opts.seed->first;
        hi = opts.seed->second;
        expand_cap = 1e4 * hi;
    } else if (alpha >= 100.0) {
        const UpperBoundResult ub = upper_bound(*model, alpha);
        const CertificateContext ctx = make_certificate_context(grid);
        const LowerBoundResult lb = heuristic_lower_bound(*model, alpha, ctx);
        hi = ub.degenerate ? 4.0 * model->k() * alpha : 1.2 * ub.lambda_ub;
        lo = lb.any_pass ? 0.5 * lb.lambda_lb : 1e-3 * hi;
        expand_cap = 10.0 * (ub.degenerate ? hi : ub.lambda_ub);
    } else {
        lo = 0.05;
        hi = 4.0;
        expand_cap = 1e4;
    }

    // Establish the classification sandwich, expanding geometrically if the
    // seed misclassifies.
    std::optional<Vector> lo_profile;
    SolveOutcome lo_out = cls.classify(lo, std::nullopt, true, true);
    int guard = 0;
    while (!lo_out.converged()) {
        lo *= 0.25;
        if (lo < 1e-6 || ++guard > 40)
            throw SeedBracketFailure("no existence point found down to lambda = 1e-6");
        lo_out = cls.classify(lo, std::nullopt, true, true);
    }
    lo_profile = lo_out.profile->v;

    SolveOutcome hi_out = cls.classify(hi, lo_profile, true, true);
    guard = 0;
    while (hi_out.status != SolveStatus::NoSolutionDetected) {
        if (hi_out.converged()) {
            lo = hi;
            lo_profile = hi_out.profile->v;
        }
        hi *= 2.0;
        if (hi > expand_cap || ++guard > 40)
            throw SeedBracketFailure("no blow-up point found below the expansion cap");
        hi_out = cls.classify(hi, lo_profile, true, true);
    }
    res.hi_verified = true;

    // Bisection; warm starts from the existence side, cold restart every
    // fourth step to re-verify minimality.
    int steps = 0;
    while ((hi - lo) / lo > opts.bracket_tol && steps < 80) {
        const double mid = 0.5 * (lo + hi);
        const bool cold = (steps % 4 == 3);
        const bool newton_ok = (mid - lo) > 0.01 * mid && (hi - mid) > 0.01 * mid;
        const SolveOutcome out = cls.classify(mid, lo_profile, newton_ok, cold);
        if (out.converged()) {
            lo = mid;
            lo_profile = out.profile->v;
        } else {
            hi = mid;
            res.hi_verified = out.status == SolveStatus::NoSolutionDetected;
        }
        ++steps;
    }
    res.bisection_steps = steps;

    // Fold polish: warm starts converge fast just below the fold, so a few
    // more halvings move the existence endpoint deep into the bracket.
    for (int p = 0; p < opts.fold_polish_steps; ++p) {
        const double mid = 0.5 * (lo + hi);
        if (!(mid > lo && mid < hi)) break;
        const SolveOutcome out = cls.run(mid, lo_profile, false, 2);
        res.log.push_back({mid, out.status, out.diagnostics.outer_iterations,
                           out.diagnostics.center_value, out.diagnostics.final_residual, false});
        if (out.converged()) {
            lo = mid;
            lo_profile = out.profile->v;
        } else {
            hi = mid;
            res.hi_verified = out.status == SolveStatus::NoSolutionDetected;
        }
    }

    // The reported bracket must end on a verified blow-up point.
    guard = 0;
    while (!res.hi_verified && guard < 3) {
        const SolveOutcome out = cls.run(hi, std::nullopt, true, 4);
        if (out.status == SolveStatus::NoSolutionDetected) {
            res.hi_verified = true;
            break;
        }
        if (out.converged()) {
            lo = hi;
            lo_profile = out.profile->v;
        }
        hi *= 1.0 + opts.bracket_tol;
        ++guard;
    }

    res.lambda_lo = lo;
    res.lambda_hi = hi;
    res.lambda_star_estimate = lo;

    SolveOutcome final_out = cls.run(lo, lo_profile, true, 4);
    if (!final_out.converged())
        throw NumericalError("existence endpoint failed to re-converge");
    res.extremal = std::move(*final_out.profile);
    res.extremal.tag = ProfileTag::ExtremalCandidate;
    res.kappa1_at_fold = principal_eigenvalue(res.extremal).kappa1;

    if (opts.companion_check) {
        CriticalOptions copts = opts;
        copts.companion_check = false;
        copts.resolution = GridResolution{std::max(64, opts.resolution.core_cells / 2),
                                          1.0 + 2.0 * (opts.resolution.stretch - 1.0)};
        copts.seed = {0.5 * res.lambda_lo, 2.0 * res.lambda_hi};
        const LambdaStarResult companion = find_lambda_star(model, alpha, copts);
        res.companion_ran = true;
        res.companion_lambda_star = companion.lambda_star_estimate;
        res.companion_disagrees =
            std::abs(companion.lambda_star_estimate - res.lambda_star_estimate) >
            2.0 * opts.bracket_tol * res.lambda_star_estimate;
    }
    return res;
}

ExtremalDiagnostics profile_diagnostics(const SolutionProfile& profile) {
    const RadialGrid& grid = *profile.grid;
    const Nonlinearity& nl = grid.model->nonlinearity();
    const FlowProfile& flow = grid.model->flow();
    const int N = grid.cell_count();

    // ∫_B q dx = (2 pi / alpha) ∫ q(v(y)) y dy in rescaled variables; the
    // oracle configuration is already on the unit disk.
    const double factor = grid.oracle_mode() ? 2.0 * M_PI : 2.0 * M_PI / grid.alpha;
    auto disk_trapz = [&](auto&& node_value) {
        double acc = 0.0;
        for (int i = 0; i < N; ++i) {
            const double fa = node_value(i) * grid.y[i];
            const double fb = node_value(i + 1) * grid.y[i + 1];
            acc += 0.5 * (fa + fb) * (grid.y[i + 1] - grid.y[i]);
        }
        return factor * acc;
    };

    ExtremalDiagnostics d;
    d.center = profile.v[0];
    d.u_at_half = profile.at(0.5 * grid.domain_end);
    d.integral_u = disk_trapz([&](int i) { return profile.v[i]; });
    d.integral_psi_f = disk_trapz([&](int i) { return grid.psi_a[i] * nl.value(profile.v[i]); });

    QuadratureOptions qopts;
    qopts.rel_tol = 1e-10;
    d.f0_integral_psi =
        nl.value(0.0) * 2.0 * M_PI *
        integrate([&](double r) { return flow.psi(r) * r; }, 0.0, 1.0, qopts).value;

    d.lp_norm_1 = disk_trapz([&](int i) { return std::abs(profile.v[i]); });
    d.lp_norm_2 = std::sqrt(disk_trapz([&](int i) { return profile.v[i] * profile.v[i]; }));
    d.lp_norm_4 = std::pow(disk_trapz([&](int i) { return std::pow(profile.v[i], 4.0); }), 0.25);
    return d;
}

ExtremalDiagnostics extremal_diagnostics(const LambdaStarResult& result) {
    return profile_diagnostics(result.extremal);
}

}  // namespace jetcrit
