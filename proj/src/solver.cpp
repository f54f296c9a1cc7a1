#include "jetcrit/solver.hpp"

#include "jetcrit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace jetcrit {

namespace {

Vector reaction_load(const RadialGrid& grid, const Vector& u, double loadscale,
                     double eval_clamp) {
    const int n = grid.node_count();
    Vector g(n);
    const Nonlinearity& nl = grid.model->nonlinearity();
    for (int i = 0; i < n; ++i)
        g[i] = loadscale * grid.psi_a[i] * nl.value(std::min(u[i], eval_clamp));
    return g;
}

// Largest argument where f stays far from overflow; iterates past the blow-up
// cap are clamped here for evaluation only.
double f_eval_clamp(const Nonlinearity& nl) {
    double s = 1.0;
    for (int it = 0; it < 400 && nl.value(s) < 1e250; ++it) s *= 1.5;
    return s;
}

}  // namespace

double SolutionProfile::at(double yq) const {
    const Array& y = grid->y;
    const int N = grid->cell_count();
    if (yq <= 0.0) return v[0];
    if (yq >= y[N]) return v[N];
    int lo = 0, hi = N;
    while (hi - lo > 1) {
        const int mid = (lo + hi) / 2;
        if (y[mid] <= yq)
            lo = mid;
        else
            hi = mid;
    }
    const double t = (yq - y[lo]) / (y[lo + 1] - y[lo]);
    return v[lo] + t * (v[lo + 1] - v[lo]);
}

double solve_residual(const RadialGrid& grid, const Vector& u, double lambda) {
    const double loadscale = grid.load_scale(lambda);
    const Vector g = reaction_load(grid, u, loadscale, 1e308);
    const Vector r = flux_residual(grid, u, g);
    const int N = grid.cell_count();
    const double denom = g.head(N).cwiseAbs().maxCoeff() + 1e-300;
    return r.head(N).cwiseAbs().maxCoeff() / denom;
}

SolveOutcome minimal_solution(const Model& model, double alpha, double lambda,
                              std::shared_ptr<const RadialGrid> grid, const SolveOptions& opts) {
    if (!grid) throw GridMismatch("minimal_solution requires a grid");
    if (grid->alpha != alpha) throw GridMismatch("grid was built for a different alpha");
    if (grid->model.get() != &model &&
        grid->model->to_json().dump() != model.to_json().dump())
        throw GridMismatch("grid was built for a different model");
    if (!(lambda > 0.0)) throw OutOfRange("minimal_solution requires lambda > 0");

    const Nonlinearity& nl = model.nonlinearity();
    const int N = grid->cell_count();
    const double loadscale = grid->load_scale(lambda);
    const double cap = opts.blowup_cap ? *opts.blowup_cap : nl.g_inverse(1e-8 * nl.k());
    const double eval_clamp = f_eval_clamp(nl);

    SolveOutcome out;
    out.diagnostics.cap = cap;

    Vector u = Vector::Zero(N + 1);
    if (opts.warm_start) {
        if (opts.warm_start->size() != N + 1)
            throw GridMismatch("warm start profile does not match the grid");
        u = opts.warm_start->cwiseMax(0.0);
        u[N] = 0.0;
        out.diagnostics.warm_started = true;
    }

    // Window statistics of the centre value for blow-up classification.
    const int window = 20;
    std::deque<double> growth;
    double window_start_center = u[0];
    bool restarted_cold = false;

    double res = solve_residual(*grid, u, lambda);
    int n = 0;

    for (n = 1; n <= opts.max_outer; ++n) {
        // Smallest shift keeping the update map monotone on the iterate range.
        double omega;
        if (opts.fixed_shift) {
            omega = *opts.fixed_shift;
        } else {
            double fprime_max = 0.0;
            for (int i = 0; i < N; ++i)
                fprime_max =
                    std::max(fprime_max, grid->psi_a[i] * nl.deriv(std::min(u[i], eval_clamp)));
            omega = loadscale * fprime_max;
        }

        const DiscreteOperator op = assemble(grid, omega);
        const Vector g = reaction_load(*grid, u, loadscale, eval_clamp);
        Vector u_next = op.solve(g, u);
        u_next = u_next.cwiseMax(0.0);
        u_next[N] = 0.0;

        // The increasing-iterate guarantee holds from zero (or a subsolution);
        // a violation past roundoff slack means the start was not one.
        const double slack = 1e-13 * (1.0 + u.cwiseAbs().maxCoeff());
        const double drop = (u - u_next).maxCoeff();
        if (drop > slack && n > 1) {
            if (!restarted_cold && opts.warm_start) {
                restarted_cold = true;
                u.setZero();
                window_start_center = 0.0;
                growth.clear();
                continue;
            }
            throw NumericalError("monotone iteration ordering violated");
        }
        u = u_next;

        if (n % window == 0) {
            growth.push_back(u[0] - window_start_center);
            window_start_center = u[0];
            if (growth.size() > 3) growth.pop_front();
        }
        const bool accelerating =
            growth.size() == 3 && growth[1] > growth[0] * 1.001 && growth[2] > growth[1] * 1.001;

        if (u[0] > cap) {
            out.diagnostics.cap_crossed = true;
            if (accelerating || u[0] > 1e100) {
                out.status = SolveStatus::NoSolutionDetected;
                out.diagnostics.outer_iterations = n;
                out.diagnostics.center_value = u[0];
                out.diagnostics.growth_accelerating = true;
                return out;
            }
        }

        res = solve_residual(*grid, u, lambda);
        if (res <= opts.residual_tol) break;

        // Newton polish once the monotone phase is close.
        if (opts.newton_enabled && res <= opts.newton_switch_tol && !out.diagnostics.cap_crossed) {
            const Vector u_mono = u;
            Vector w = u;
            double wres = res;
            bool ok = false;
            for (int it = 0; it < 50; ++it) {
                TridiagonalSystem sys;
                sys.sub.setZero(N);
                sys.diag.setZero(N + 1);
                sys.super.setZero(N);
                Vector fw(N + 1);
                for (int i = 0; i <= N; ++i)
                    fw[i] = loadscale * grid->psi_a[i] * nl.deriv(std::min(w[i], eval_clamp));
                sys.diag[0] = 1.0 - grid->load_self[0] * fw[0];
                sys.super[0] = -1.0 - grid->load_next[0] * fw[1];
                for (int i = 1; i < N; ++i) {
                    sys.sub[i - 1] = -grid->rho[i] - grid->load_prev[i] * fw[i - 1];
                    sys.diag[i] = 1.0 + grid->rho[i] - grid->load_self[i] * fw[i];
                    sys.super[i] = -1.0 - grid->load_next[i] * fw[i + 1];
                }
                sys.diag[N] = 1.0;

                const Vector gw = reaction_load(*grid, w, loadscale, eval_clamp);
                DiscreteOperator flux = assemble(grid);
                Vector resid = Vector::Zero(N + 1);
                {
                    const Vector attr = flux.attribute_load(gw);
                    resid[0] = (w[0] - w[1]) - attr[0];
                    for (int i = 1; i < N; ++i)
                        resid[i] =
                            -grid->rho[i] * w[i - 1] + (1.0 + grid->rho[i]) * w[i] - w[i + 1] -
                            attr[i];
                }
                sys.rhs = -resid;
                Vector delta;
                try {
                    delta = solve_tridiagonal(sys);
                } catch (const SingularPivot&) {
                    break;
                }
                ++out.diagnostics.newton_iterations;

                bool stepped = false;
                for (double s = 1.0; s >= 1.0 / 64.0; s *= 0.5) {
                    Vector trial = (w + s * delta).cwiseMax(0.0);
                    trial[N] = 0.0;
                    const double floor = (u_mono - trial).maxCoeff();
                    if (floor > opts.residual_tol * (1.0 + u_mono.cwiseAbs().maxCoeff()))
                        continue;
                    const double tres = solve_residual(*grid, trial, lambda);
                    if (tres < 0.9 * wres) {
                        w = trial;
                        wres = tres;
                        stepped = true;
                        break;
                    }
                }
                if (!stepped) break;
                if (wres <= opts.residual_tol) {
                    ok = true;
                    break;
                }
            }
            if (ok) {
                u = w;
                res = wres;
                break;
            }
        }
    }

    out.diagnostics.outer_iterations = std::min(n, opts.max_outer);
    out.diagnostics.final_residual = res;
    out.diagnostics.center_value = u[0];

    if (res > opts.residual_tol) {
        out.status = SolveStatus::Inconclusive;
        return out;
    }

    SolutionProfile prof;
    prof.grid = grid;
    prof.v = u;
    prof.lambda = lambda;
    prof.alpha = alpha;
    prof.outer_iterations = out.diagnostics.outer_iterations;
    prof.residual = res;
    prof.tag = ProfileTag::Minimal;

    // Contract checks on the returned profile.
    if (prof.v[N] != 0.0) throw NumericalError("profile boundary value is nonzero");
    const double mono_slack = 1e-12 * (1.0 + prof.v[0]);
    for (int i = 0; i < N; ++i)
        if (prof.v[i + 1] > prof.v[i] + mono_slack)
            throw NumericalError("profile is not non-increasing");

    out.status = SolveStatus::Converged;
    out.profile = std::move(prof);
    return out;
}

ComparisonVerdict comparison_check(const SolutionProfile& p1, const SolutionProfile& p2,
                                   double tol) {
    ComparisonVerdict v;
    if (p1.grid != p2.grid || p2.lambda < p1.lambda) {
        v.caller_error = true;
        return v;
    }
    v.max_violation = std::max(0.0, (p1.v - p2.v).maxCoeff());
    v.pass = v.max_violation <= tol * (1.0 + p1.v.cwiseAbs().maxCoeff());
    return v;
}

GTransformResidual g_transform_residual(const SolutionProfile& p) {
    const RadialGrid& grid = *p.grid;
    const Nonlinearity& nl = grid.model->nonlinearity();
    const int N = grid.cell_count();
    const double loadscale = grid.load_scale(p.lambda);

    Vector gv(N + 1);
    for (int i = 0; i <= N; ++i) gv[i] = nl.g_fast(std::max(p.v[i], 0.0));

    GTransformResidual out;
    out.per_node = Vector::Zero(N + 1);
    for (int i = 1; i < N; ++i) {
        const double hm = grid.y[i] - grid.y[i - 1];
        const double hp = grid.y[i + 1] - grid.y[i];
        const double gp = (gv[i + 1] - gv[i]) / hp * (hm / (hm + hp)) +
                          (gv[i] - gv[i - 1]) / hm * (hp / (hm + hp));
        const double gpp = 2.0 * (hm * gv[i + 1] - (hm + hp) * gv[i] + hp * gv[i - 1]) /
                           (hm * hp * (hm + hp));
        const double y = grid.y[i];
        const double adv = 1.0 / y + (grid.oracle_mode() ? 0.0 : y * grid.phi_a[i]);
        const double rhs = loadscale * grid.psi_a[i] + gp * gp * nl.deriv(p.v[i]);
        out.per_node[i] = gpp + adv * gp - rhs;
    }
    out.max_norm = out.per_node.cwiseAbs().maxCoeff();
    return out;
}

}  // namespace jetcrit
