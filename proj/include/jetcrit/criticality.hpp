#pragma once

#include "jetcrit/bounds.hpp"
#include "jetcrit/solver.hpp"

#include <optional>
#include <vector>

namespace jetcrit {

struct CriticalOptions {
    GridResolution resolution = GridResolution::standard();
    double bracket_tol = 1e-3;  // relative width of the final bracket
    // Extra warm-started halvings past the tolerance; they sharpen the
    // existence endpoint (where the stability margin collapses like the
    // square root of the distance to the fold) without touching the
    // reported bracket guarantee.
    int fold_polish_steps = 10;
    SolveOptions solve;
    bool companion_check = true;  // re-run on a coarser mesh and compare
    std::optional<std::pair<double, double>> seed;  // explicit bracket seed
};

struct BisectionStep {
    double lambda = 0.0;
    SolveStatus status = SolveStatus::Inconclusive;
    int iterations = 0;
    double center = 0.0;
    double residual = 0.0;
    bool cold_start = false;
};

struct LambdaStarResult {
    double alpha = 0.0;
    double lambda_lo = 0.0;  // last existence point; carries the profile
    double lambda_hi = 0.0;  // verified non-existence point
    double lambda_star_estimate = 0.0;  // = lambda_lo
    SolutionProfile extremal;           // minimal solution at lambda_lo
    double kappa1_at_fold = 0.0;
    int bisection_steps = 0;
    std::vector<BisectionStep> log;
    bool hi_verified = false;      // lambda_hi classified as blow-up
    int inconclusive_count = 0;    // midpoints that resisted classification
    bool experimental_flow = false;  // psi vanishes inside the domain

    bool companion_ran = false;
    double companion_lambda_star = 0.0;
    bool companion_disagrees = false;
};

/// Brackets the fold by bisection on the Converged / NoSolutionDetected
/// dichotomy, seeded from the certified bounds when they apply, and reports
/// the last existence point together with its profile and stability margin.
LambdaStarResult find_lambda_star(std::shared_ptr<const Model> model, double alpha,
                                  const CriticalOptions& opts = {});

struct ExtremalDiagnostics {
    double center = 0.0;           // u*(0)
    double u_at_half = 0.0;        // u*(r = 1/2)
    double integral_u = 0.0;       // ∫_B u*
    double integral_psi_f = 0.0;   // ∫_B psi f(u*)
    double f0_integral_psi = 0.0;  // f(0) ∫_B psi
    double lp_norm_1 = 0.0;
    double lp_norm_2 = 0.0;
    double lp_norm_4 = 0.0;
};

/// Disk integrals of the extremal candidate via the radial change of
/// variables (trapezoid on the grid).
ExtremalDiagnostics extremal_diagnostics(const LambdaStarResult& result);

/// Same diagnostics for an arbitrary profile (used by the sweep internals).
ExtremalDiagnostics profile_diagnostics(const SolutionProfile& profile);

}  // namespace jetcrit
