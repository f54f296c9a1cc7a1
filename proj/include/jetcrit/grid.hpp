#pragma once

#include "jetcrit/model.hpp"

#include <memory>
#include <ostream>
#include <string>

namespace jetcrit {

/// Mesh density: uniform core spacing plus the geometric stretch ratio of the
/// tail. refined() halves every cell width asymptotically (for order studies).
struct GridResolution {
    int core_cells = 512;
    double stretch = 1.02;

    static GridResolution coarse() { return {128, 1.04}; }
    static GridResolution standard() { return {512, 1.02}; }
    static GridResolution fine() { return {1024, 1.01}; }
    static GridResolution explicit_cells(int n) { return {n, 1.02}; }
    GridResolution refined() const { return {2 * core_cells, std::sqrt(stretch)}; }

    static GridResolution parse(const std::string& name);
    std::string name() const;
};

/// Graded radial mesh on [0, sqrt(alpha)] — or on [0, 1] with unit weight in
/// the alpha = 0 oracle configuration — carrying per-node profile samples,
/// log-weights, and the per-cell tables of the conservative flux scheme.
///
/// Cell tables use exponent-difference normalisation throughout: the weight
/// w = exp(F) spans far beyond double range at large alpha, so only ratios of
/// w across a cell are ever formed.
class RadialGrid {
public:
    double alpha = 0.0;
    double domain_end = 1.0;
    GridResolution resolution;
    std::shared_ptr<const Model> model;

    Array y;       // nodes, y[0] = 0, y[N] = domain_end
    Array log_w;   // F(y_i) = log of the divergence-form weight
    Array phi_a;   // phi(y/domain_end)
    Array psi_a;
    Array m_a;     // running ratio max M(y/domain_end)

    // Per-cell (size N): flux resistance R = ∫ dz/(z w), cell weight
    // S = ∫ z w dz with its hat-weighted halves, load-to-gradient transfer
    // T split by attribution node, and the log-weight increment.
    Array log_r;   // log R; +inf for the origin cell (never used there)
    Array log_s;
    Array log_sl, log_sr;
    Array t_left, t_right;
    Array dlogw;

    // Per-node scheme coefficients derived from the cells (size N+1).
    Array rho;          // R_i / R_{i-1}; rho[0] = 0 unused, rho[1] = 0
    Array load_prev;    // weight of q_{i-1} in row i
    Array load_self;    // weight of q_i
    Array load_next;    // weight of q_{i+1}
    Array lumped_mass;  // row sum of the three, pairs with shift terms
    Array log_fem_mass; // log ∫ hat_i z w dz (variational mass)

    int cell_count() const { return static_cast<int>(y.size()) - 1; }
    int node_count() const { return static_cast<int>(y.size()); }
    bool oracle_mode() const { return alpha == 0.0; }
    /// Reaction load multiplier: lambda/alpha, or lambda itself at alpha = 0.
    double load_scale(double lambda) const { return oracle_mode() ? lambda : lambda / alpha; }

    double log_weight(double yy) const;  // F(y), any y in [0, domain_end]

    /// log ∫_cell z w(z) g(z) dz for g >= 0 on the cell.
    double cell_weighted_log_integral(int cell, const ScalarFn& g) const;
};

std::shared_ptr<const RadialGrid> build_grid(std::shared_ptr<const Model> model, double alpha,
                                             const GridResolution& res = GridResolution::standard());

/// Tridiagonal rows of (L + Omega + d) with L v = -(1/(y w))(y w v')', stored
/// row-scaled by the cell resistances; Dirichlet row at y_N, symmetry closure
/// at the origin. Off-diagonals stay <= 0 and the diagonal >= 0 by
/// construction (checked on assembly).
struct DiscreteOperator {
    std::shared_ptr<const RadialGrid> grid;
    Vector sub, diag, super;
    double omega = 0.0;
    Vector diag_load;  // empty means zero

    /// Pointwise estimate of (L + Omega + d) v at the nodes (identity row at N
    /// reported as 0).
    Vector apply(const Vector& v) const;

    /// Distributes nodal loads g into the scheme's right-hand side.
    Vector attribute_load(const Vector& g) const;

    /// Thomas solve against a raw scaled-row right-hand side.
    Vector solve_raw(const Vector& rhs) const;

    /// Solve (L + Omega + d) u = g for nodal loads g; the shift pairs with the
    /// lumped mass so it cancels identically at a fixed point.
    Vector solve(const Vector& g, const Vector& shift_values) const;
};

DiscreteOperator assemble(std::shared_ptr<const RadialGrid> grid, double omega = 0.0,
                          const Vector& diag_load = Vector());

/// Residual of the flux scheme at nodal values v against nodal loads g,
/// normalised per node by the lumped mass (so it estimates the equation
/// error pointwise). Entry N is 0.
Vector flux_residual(const RadialGrid& grid, const Vector& v, const Vector& g);

/// Symmetrised P1 pencil of the weighted form ∫ (eta'^2 - rho eta^2) y w dy
/// with a Dirichlet condition at y_N; rho may be empty (zero potential).
/// Returns {diag, off} over nodes 0..N-1.
std::pair<Vector, Vector> sym_fem_pencil(const RadialGrid& grid, const Vector& rho_potential);

/// k-th smallest Dirichlet eigenvalue of the weighted Laplacian on the grid
/// (stencil validation; with the unit-domain oracle grid this is the radial
/// disk spectrum).
double dirichlet_eigen_estimate(const RadialGrid& grid, int k = 0);

void dump_grid_csv(const RadialGrid& grid, std::ostream& out);

}  // namespace jetcrit
