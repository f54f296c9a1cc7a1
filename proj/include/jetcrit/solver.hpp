#pragma once

#include "jetcrit/grid.hpp"

#include <memory>
#include <optional>

namespace jetcrit {

struct SolveOptions {
    int max_outer = 5000;
    double residual_tol = 1e-10;      // relative to the reaction load, max norm
    double newton_switch_tol = 1e-3;  // residual level where Newton polish starts
    bool newton_enabled = true;
    std::optional<double> blowup_cap;  // default g_inverse(1e-8 k)
    // Shift policy: by default the smallest value keeping the update map
    // monotone on the current iterate range (load * max psi f'(u)); a fixed
    // override is available for stress tests.
    std::optional<double> fixed_shift;
    std::optional<Vector> warm_start;
};

/// NoSolutionDetected is a discretisation-level surrogate for nonexistence:
/// it reports blow-up of the discrete iterate past the cap with accelerating
/// centre growth, not a continuum certificate.
enum class SolveStatus { Converged, NoSolutionDetected, Inconclusive };

struct SolveDiagnostics {
    int outer_iterations = 0;
    int newton_iterations = 0;
    double final_residual = 0.0;
    double center_value = 0.0;
    double cap = 0.0;
    bool cap_crossed = false;
    bool growth_accelerating = false;
    bool warm_started = false;
};

enum class ProfileTag { Minimal, ExtremalCandidate };

/// Converged radial profile v(y) >= 0, non-increasing, v(y_N) = 0.
struct SolutionProfile {
    std::shared_ptr<const RadialGrid> grid;
    Vector v;
    double lambda = 0.0;
    double alpha = 0.0;
    int outer_iterations = 0;
    double residual = 0.0;
    ProfileTag tag = ProfileTag::Minimal;

    double center() const { return v[0]; }
    /// Linear interpolation of v at a point of [0, y_N].
    double at(double y) const;
};

struct SolveOutcome {
    SolveStatus status = SolveStatus::Inconclusive;
    std::optional<SolutionProfile> profile;
    SolveDiagnostics diagnostics;
    bool converged() const { return status == SolveStatus::Converged; }
};

/// Minimal positive solution at (alpha, lambda) as the limit of the
/// non-decreasing iteration from zero, optionally polished by damped Newton
/// steps that must not drop below the last monotone iterate.
SolveOutcome minimal_solution(const Model& model, double alpha, double lambda,
                              std::shared_ptr<const RadialGrid> grid,
                              const SolveOptions& opts = {});

/// Relative weighted residual of nodal values u against the reaction load at
/// the given lambda (the solver's convergence functional).
double solve_residual(const RadialGrid& grid, const Vector& u, double lambda);

struct ComparisonVerdict {
    bool pass = false;
    double max_violation = 0.0;
    bool caller_error = false;  // swapped lambdas or mismatched grids
};

/// Checks the monotonicity v(lambda2) >= v(lambda1) - tol pointwise for
/// lambda2 >= lambda1 on a shared grid.
ComparisonVerdict comparison_check(const SolutionProfile& p1, const SolutionProfile& p2,
                                   double tol = 1e-9);

struct GTransformResidual {
    double max_norm = 0.0;
    Vector per_node;  // interior entries; 0 at both ends
};

/// Maps a converged profile through the g-transform and evaluates the
/// transformed equation's residual with finite differences — an independent
/// consistency check of the primal solve.
GTransformResidual g_transform_residual(const SolutionProfile& p);

}  // namespace jetcrit
