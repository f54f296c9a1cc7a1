#pragma once

#include "jetcrit/solver.hpp"

#include <vector>

namespace jetcrit {

enum class StabilityVerdict { SemiStable, Unstable, Marginal };

struct EigResult {
    double kappa1 = 0.0;
    Vector eigenvector;  // on all nodes, zero at y_N, max-normalised to 1
    int iterations = 0;
    double residual = 0.0;
    double tol_eig = 0.0;  // verdict threshold, tied to the lambda = 0 spectrum
    StabilityVerdict verdict = StabilityVerdict::SemiStable;
};

/// Principal eigenvalue of the linearised operator around a converged profile
/// in the weighted form ∫ (|eta'|^2 - loadscale psi f'(v) eta^2) y w dy, posed
/// on the rescaled domain. The verdict sign is invariant under the domain
/// rescaling even though the reported value is the rescaled-domain one.
EigResult principal_eigenvalue(const SolutionProfile& profile);

struct MarginPoint {
    double lambda = 0.0;
    double kappa1 = 0.0;
};

/// kappa1 along a lambda ladder on the minimal branch (non-increasing in
/// lambda); solve failures are propagated as NoConvergence.
std::vector<MarginPoint> stability_margin_curve(
    const Model& model, double alpha, const std::vector<double>& lambdas,
    std::shared_ptr<const RadialGrid> grid, const SolveOptions& solve_opts = {});

}  // namespace jetcrit
