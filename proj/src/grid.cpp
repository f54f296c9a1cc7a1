#include "jetcrit/grid.hpp"

#include "jetcrit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace jetcrit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxNodes = 40000;

// Gauss-Legendre 4 on [-1, 1].
constexpr double kG4x[2] = {0.3399810435848562648027, 0.8611363115940525752239};
constexpr double kG4w[2] = {0.6521451548625461426269, 0.3478548451374538573731};

struct CellTables {
    double log_r = 0.0;
    double log_s = 0.0, log_sl = 0.0, log_sr = 0.0;
    double t_left = 0.0, t_right = 0.0;
    double dlogw = 0.0;
};

// All integrals over one cell [a, b] of the divergence-form weight w = e^F.
// Accumulation is panelled so that per-panel log-weight increments stay O(1):
// every exponential formed here has a non-positive argument.
CellTables compute_cell(const ScalarFn& F, double a, double b, bool origin_cell) {
    CellTables out;
    const double h = b - a;
    const double Fa = F(a);
    const double Fb = F(b);
    out.dlogw = Fb - Fa;

    const int np = std::max(6, static_cast<int>(std::ceil(std::abs(out.dlogw) / 1.5)));

    double r_hat = 0.0;       // ∫ e^{Fa-F}/z
    double s_hat_l = 0.0;     // ∫ z hatL e^{F-Fb}
    double s_hat_r = 0.0;     // ∫ z hatR e^{F-Fb}
    double t_l = 0.0, t_r = 0.0;
    double al = 0.0, ar = 0.0;  // ∫_a^{zk} s w hat ds / w(zk)

    double zk = a;
    double Fk = Fa;
    for (int p = 0; p < np; ++p) {
        const double zk1 = (p + 1 == np) ? b : a + h * (p + 1) / np;
        const double Fk1 = (p + 1 == np) ? Fb : F(zk1);
        const double half = 0.5 * (zk1 - zk);
        const double mid = 0.5 * (zk1 + zk);

        double panel_il = 0.0, panel_ir = 0.0;  // inner integrals rel. zk1
        for (int g = 0; g < 4; ++g) {
            const double zg = g < 2 ? mid - half * kG4x[g] : mid + half * kG4x[g - 2];
            const double wg = half * kG4w[g % 2];
            const double Fg = F(zg);
            const double hat_l = (b - zg) / h;
            const double hat_r = (zg - a) / h;

            if (!origin_cell) r_hat += wg * std::exp(Fa - Fg) / zg;
            s_hat_l += wg * zg * hat_l * std::exp(Fg - Fb);
            s_hat_r += wg * zg * hat_r * std::exp(Fg - Fb);

            // Inner partial ∫_{zk}^{zg} s w hat ds relative to zg.
            const double ihalf = 0.5 * (zg - zk);
            const double imid = 0.5 * (zg + zk);
            double part_l = 0.0, part_r = 0.0;
            for (int q = 0; q < 4; ++q) {
                const double sq = q < 2 ? imid - ihalf * kG4x[q] : imid + ihalf * kG4x[q - 2];
                const double wq = ihalf * kG4w[q % 2];
                const double e = std::exp(F(sq) - Fg);
                part_l += wq * sq * ((b - sq) / h) * e;
                part_r += wq * sq * ((sq - a) / h) * e;
            }
            const double al_g = al * std::exp(Fk - Fg) + part_l;
            const double ar_g = ar * std::exp(Fk - Fg) + part_r;
            t_l += wg * al_g / zg;
            t_r += wg * ar_g / zg;

            panel_il += wg * zg * hat_l * std::exp(Fg - Fk1);
            panel_ir += wg * zg * hat_r * std::exp(Fg - Fk1);
        }
        al = al * std::exp(Fk - Fk1) + panel_il;
        ar = ar * std::exp(Fk - Fk1) + panel_ir;
        zk = zk1;
        Fk = Fk1;
    }

    out.log_r = origin_cell ? kInf : std::log(r_hat) - Fa;
    out.log_sl = std::log(s_hat_l) + Fb;
    out.log_sr = std::log(s_hat_r) + Fb;
    out.log_s = logsumexp(out.log_sl, out.log_sr);
    out.t_left = t_l;
    out.t_right = t_r;
    return out;
}

}  // namespace

GridResolution GridResolution::parse(const std::string& name) {
    if (name == "coarse") return coarse();
    if (name == "default" || name == "standard") return standard();
    if (name == "fine") return fine();
    try {
        const int n = std::stoi(name);
        if (n > 0) return explicit_cells(n);
    } catch (...) {  // falls through to the error below
    }
    throw ConfigError("unknown resolution '" + name + "' (coarse|default|fine|<cells>)");
}

std::string GridResolution::name() const {
    const GridResolution c = coarse(), s = standard(), f = fine();
    if (core_cells == c.core_cells && stretch == c.stretch) return "coarse";
    if (core_cells == s.core_cells && stretch == s.stretch) return "default";
    if (core_cells == f.core_cells && stretch == f.stretch) return "fine";
    return std::to_string(core_cells) + "@" + std::to_string(stretch);
}

double RadialGrid::log_weight(double yy) const {
    if (oracle_mode()) return 0.0;
    return alpha * model->flow().phi_cumulative(yy / domain_end);
}

double RadialGrid::cell_weighted_log_integral(int cell, const ScalarFn& g) const {
    const double a = y[cell], b = y[cell + 1];
    const double h = b - a;
    const double Fb = log_weight(b);
    const int np = std::max(6, static_cast<int>(std::ceil(std::abs(dlogw[cell]) / 1.5)));
    double acc = 0.0;
    for (int p = 0; p < np; ++p) {
        const double z0 = a + h * p / np;
        const double z1 = (p + 1 == np) ? b : a + h * (p + 1) / np;
        const double half = 0.5 * (z1 - z0), mid = 0.5 * (z1 + z0);
        for (int q = 0; q < 4; ++q) {
            const double zq = q < 2 ? mid - half * kG4x[q] : mid + half * kG4x[q - 2];
            const double wq = half * kG4w[q % 2];
            acc += wq * zq * g(zq) * std::exp(log_weight(zq) - Fb);
        }
    }
    return std::log(acc) + Fb;
}

std::shared_ptr<const RadialGrid> build_grid(std::shared_ptr<const Model> model, double alpha,
                                             const GridResolution& res) {
    if (!model) throw ConfigError("build_grid requires a model");
    if (!(alpha >= 0.0) || !std::isfinite(alpha))
        throw ConfigError("build_grid requires alpha >= 0");

    auto grid = std::make_shared<RadialGrid>();
    grid->alpha = alpha;
    grid->model = model;
    grid->resolution = res;
    const bool oracle = alpha == 0.0;
    const double domain_end = oracle ? 1.0 : std::sqrt(alpha);
    grid->domain_end = domain_end;

    const double y_core =
        oracle ? domain_end : std::min(domain_end, std::max(10.0, std::pow(alpha, 0.1)));
    const int core = std::max(res.core_cells, 8);
    double stretch = std::max(res.stretch, 1.0005);

    std::vector<double> nodes;
    for (int attempt = 0;; ++attempt) {
        nodes.clear();
        nodes.reserve(core + 256);
        for (int i = 0; i <= core; ++i)
            nodes.push_back(y_core * static_cast<double>(i) / core);
        if (y_core < domain_end) {
            double h = y_core / core;
            double yy = y_core;
            while (true) {
                h *= stretch;
                if (yy + 1.25 * h >= domain_end) {
                    nodes.push_back(domain_end);
                    break;
                }
                yy += h;
                nodes.push_back(yy);
            }
        }
        if (static_cast<int>(nodes.size()) <= kMaxNodes) break;
        if (attempt > 30) throw ConfigError("mesh construction failed to satisfy the node cap");
        stretch = 1.0 + 2.0 * (stretch - 1.0);
    }
    if (static_cast<int>(nodes.size()) < 64)
        throw ResolutionTooCoarse("mesh has fewer than 64 nodes");

    const int N = static_cast<int>(nodes.size()) - 1;
    grid->y = Eigen::Map<const Array>(nodes.data(), nodes.size());

    const FlowProfile& flow = model->flow();
    grid->log_w.resize(N + 1);
    grid->phi_a.resize(N + 1);
    grid->psi_a.resize(N + 1);
    grid->m_a.resize(N + 1);
    for (int i = 0; i <= N; ++i) {
        const double r = std::clamp(nodes[i] / domain_end, 0.0, 1.0);
        grid->log_w[i] = oracle ? 0.0 : alpha * flow.phi_cumulative(r);
        grid->phi_a[i] = flow.phi(r);
        grid->psi_a[i] = flow.psi(r);
        grid->m_a[i] = flow.ratio_max(r);
    }

    ScalarFn F = [&](double yy) {
        return oracle ? 0.0 : alpha * flow.phi_cumulative(std::clamp(yy / domain_end, 0.0, 1.0));
    };

    grid->log_r.resize(N);
    grid->log_s.resize(N);
    grid->log_sl.resize(N);
    grid->log_sr.resize(N);
    grid->t_left.resize(N);
    grid->t_right.resize(N);
    grid->dlogw.resize(N);
    for (int i = 0; i < N; ++i) {
        const CellTables ct = compute_cell(F, nodes[i], nodes[i + 1], i == 0);
        grid->log_r[i] = ct.log_r;
        grid->log_s[i] = ct.log_s;
        grid->log_sl[i] = ct.log_sl;
        grid->log_sr[i] = ct.log_sr;
        grid->t_left[i] = ct.t_left;
        grid->t_right[i] = ct.t_right;
        grid->dlogw[i] = ct.dlogw;
    }

    grid->rho.setZero(N + 1);
    grid->load_prev.setZero(N + 1);
    grid->load_self.setZero(N + 1);
    grid->load_next.setZero(N + 1);
    grid->lumped_mass.setZero(N + 1);
    grid->log_fem_mass.setZero(N + 1);

    grid->load_self[0] = grid->t_left[0];
    grid->load_next[0] = grid->t_right[0];
    grid->lumped_mass[0] = grid->t_left[0] + grid->t_right[0];
    for (int i = 1; i < N; ++i) {
        const double rho = std::exp(grid->log_r[i] - grid->log_r[i - 1]);
        grid->rho[i] = rho;
        const double a = std::exp(grid->log_r[i] + grid->log_sl[i - 1]) - rho * grid->t_left[i - 1];
        const double bprev =
            std::exp(grid->log_r[i] + grid->log_sr[i - 1]) - rho * grid->t_right[i - 1];
        grid->load_prev[i] = std::max(a, 0.0);
        grid->load_self[i] = grid->t_left[i] + std::max(bprev, 0.0);
        grid->load_next[i] = grid->t_right[i];
        grid->lumped_mass[i] = grid->load_prev[i] + grid->load_self[i] + grid->load_next[i];
    }
    grid->log_fem_mass[0] = grid->log_sl[0];
    for (int i = 1; i < N; ++i)
        grid->log_fem_mass[i] = logsumexp(grid->log_sr[i - 1], grid->log_sl[i]);
    grid->log_fem_mass[N] = grid->log_sr[N - 1];

    for (int i = 0; i < N; ++i)
        if (!std::isfinite(grid->t_left[i]) || !std::isfinite(grid->t_right[i]) ||
            !std::isfinite(grid->log_s[i]))
            throw NumericalError("grid cell tables are not finite");

    return grid;
}

Vector DiscreteOperator::apply(const Vector& v) const {
    const RadialGrid& g = *grid;
    const int N = g.cell_count();
    if (v.size() != N + 1) throw GridMismatch("apply: vector size does not match the grid");
    Vector out = Vector::Zero(N + 1);
    const auto dval = [&](int i) { return diag_load.size() ? diag_load[i] : 0.0; };
    out[0] = (v[0] - v[1]) / g.lumped_mass[0] + (omega + dval(0)) * v[0];
    for (int i = 1; i < N; ++i) {
        const double stencil = -g.rho[i] * v[i - 1] + (1.0 + g.rho[i]) * v[i] - v[i + 1];
        out[i] = stencil / g.lumped_mass[i] + (omega + dval(i)) * v[i];
    }
    return out;
}

Vector DiscreteOperator::attribute_load(const Vector& gv) const {
    const RadialGrid& g = *grid;
    const int N = g.cell_count();
    if (gv.size() != N + 1) throw GridMismatch("attribute_load: vector size mismatch");
    Vector rhs = Vector::Zero(N + 1);
    rhs[0] = g.load_self[0] * gv[0] + g.load_next[0] * gv[1];
    for (int i = 1; i < N; ++i)
        rhs[i] = g.load_prev[i] * gv[i - 1] + g.load_self[i] * gv[i] + g.load_next[i] * gv[i + 1];
    return rhs;
}

Vector DiscreteOperator::solve_raw(const Vector& rhs) const {
    TridiagonalSystem sys;
    sys.sub = sub;
    sys.diag = diag;
    sys.super = super;
    sys.rhs = rhs;
    return solve_tridiagonal(sys);
}

Vector DiscreteOperator::solve(const Vector& gv, const Vector& shift_values) const {
    const RadialGrid& g = *grid;
    Vector rhs = attribute_load(gv);
    if (omega != 0.0) {
        if (shift_values.size() != rhs.size())
            throw GridMismatch("solve: shift vector size mismatch");
        rhs.array() += omega * g.lumped_mass.matrix().cwiseProduct(shift_values).array();
    }
    rhs[g.cell_count()] = 0.0;
    return solve_raw(rhs);
}

DiscreteOperator assemble(std::shared_ptr<const RadialGrid> grid, double omega,
                          const Vector& diag_load) {
    if (!grid) throw GridMismatch("assemble requires a grid");
    const int N = grid->cell_count();
    if (diag_load.size() && diag_load.size() != N + 1)
        throw GridMismatch("assemble: diagonal load size mismatch");
    if (omega < 0.0) throw NumericalError("assemble requires omega >= 0");

    DiscreteOperator op;
    op.grid = grid;
    op.omega = omega;
    op.diag_load = diag_load;
    op.sub.setZero(N);
    op.diag.setZero(N + 1);
    op.super.setZero(N);

    const auto dval = [&](int i) { return diag_load.size() ? diag_load[i] : 0.0; };
    op.diag[0] = 1.0 + (omega + dval(0)) * grid->lumped_mass[0];
    op.super[0] = -1.0;
    for (int i = 1; i < N; ++i) {
        op.sub[i - 1] = -grid->rho[i];
        op.diag[i] = 1.0 + grid->rho[i] + (omega + dval(i)) * grid->lumped_mass[i];
        op.super[i] = -1.0;
    }
    op.sub[N - 1] = 0.0;
    op.diag[N] = 1.0;

    for (int i = 0; i <= N; ++i) {
        if (!std::isfinite(op.diag[i]) || op.diag[i] < 0.0)
            throw NumericalError("assembled diagonal lost positivity");
        const double off = (i > 0 ? std::abs(op.sub[i - 1]) : 0.0) +
                           (i < N ? std::abs(op.super[i]) : 0.0);
        if (op.diag[i] + 1e-14 * (1.0 + off) < off)
            throw NumericalError("assembled operator lost diagonal dominance");
    }
    return op;
}

Vector flux_residual(const RadialGrid& g, const Vector& v, const Vector& gv) {
    const int N = g.cell_count();
    if (v.size() != N + 1 || gv.size() != N + 1)
        throw GridMismatch("flux_residual: vector size mismatch");
    Vector out = Vector::Zero(N + 1);
    out[0] = ((v[0] - v[1]) - (g.load_self[0] * gv[0] + g.load_next[0] * gv[1])) / g.lumped_mass[0];
    for (int i = 1; i < N; ++i) {
        const double stencil = -g.rho[i] * v[i - 1] + (1.0 + g.rho[i]) * v[i] - v[i + 1];
        const double load =
            g.load_prev[i] * gv[i - 1] + g.load_self[i] * gv[i] + g.load_next[i] * gv[i + 1];
        out[i] = (stencil - load) / g.lumped_mass[i];
    }
    return out;
}

std::pair<Vector, Vector> sym_fem_pencil(const RadialGrid& g, const Vector& rho_potential) {
    const int N = g.cell_count();
    if (rho_potential.size() && rho_potential.size() != N + 1)
        throw GridMismatch("sym_fem_pencil: potential size mismatch");

    Vector diag(N), off(N - 1);
    const auto pot = [&](int i) { return rho_potential.size() ? rho_potential[i] : 0.0; };
    for (int i = 0; i < N; ++i) {
        double k = 0.0;
        const double logm = g.log_fem_mass[i];
        if (i > 0) {
            const double h = g.y[i] - g.y[i - 1];
            k += std::exp(g.log_s[i - 1] - logm) / (h * h);
        }
        const double h = g.y[i + 1] - g.y[i];
        k += std::exp(g.log_s[i] - logm) / (h * h);
        diag[i] = k - pot(i);
        if (i < N - 1) {
            const double hh = g.y[i + 1] - g.y[i];
            off[i] = -std::exp(g.log_s[i] - 0.5 * (logm + g.log_fem_mass[i + 1])) / (hh * hh);
        }
    }
    return {diag, off};
}

double dirichlet_eigen_estimate(const RadialGrid& grid, int k) {
    auto [diag, off] = sym_fem_pencil(grid, Vector());
    return sym_tridiag_eigen(diag, off, k, false).value;
}

void dump_grid_csv(const RadialGrid& grid, std::ostream& out) {
    out << "y,log_w,psi_a,phi_a\n";
    char buf[128];
    for (int i = 0; i < grid.node_count(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", grid.y[i], grid.log_w[i],
                      grid.psi_a[i], grid.phi_a[i]);
        out << buf;
    }
}

}  // namespace jetcrit
