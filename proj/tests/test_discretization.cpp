#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "jetcrit/errors.hpp"
#include "jetcrit/grid.hpp"
#include "oracles.hpp"

#include <cmath>
#include <memory>

using namespace jetcrit;

namespace {

std::shared_ptr<const Model> unit_model() {
    return std::make_shared<Model>(
        Nonlinearity::exponential(),
        FlowProfile(PhiSpec{PhiKind::Constant}, PsiSpec{PsiKind::Constant}, 0.75));
}

std::shared_ptr<const Model> jet_model() {
    return std::make_shared<Model>(
        Nonlinearity::exponential(),
        FlowProfile(PhiSpec{PhiKind::Gaussian, 4.0}, PsiSpec{PsiKind::PowerOfPhi}, 0.75));
}

// Worst-node error of apply() against the analytic operator action on a
// smooth gaussian bump.
double truncation_error(const std::shared_ptr<const Model>& model, double alpha,
                        const GridResolution& res) {
    auto grid = build_grid(model, alpha, res);
    const DiscreteOperator op = assemble(grid);
    const int n = grid->cell_count();
    Vector v(n + 1), expect(n + 1);
    for (int i = 0; i <= n; ++i) {
        const double y = grid->y[i];
        v[i] = std::exp(-0.25 * y * y);
        const double vp = -0.5 * y * v[i];
        const double vpp = (-0.5 + 0.25 * y * y) * v[i];
        if (i == 0)
            expect[i] = -2.0 * vpp;
        else
            expect[i] = -(vpp + (1.0 / y + y * grid->phi_a[i]) * vp);
    }
    const Vector got = op.apply(v);
    double worst = 0.0;
    for (int i = 0; i < n; ++i) worst = std::max(worst, std::abs(got[i] - expect[i]));
    return worst;
}

}  // namespace

TEST_CASE("mesh endpoints and counts") {
    auto g = build_grid(unit_model(), 100.0, GridResolution::standard());
    CHECK(g->y[g->cell_count()] == 10.0);  // y_N = sqrt(alpha) exactly
    CHECK(g->cell_count() == 512);         // core covers the whole domain
    CHECK(g->y[1] - g->y[0] == doctest::Approx(10.0 / 512));

    // The stretched tail adds O(log alpha) cells: replay the construction.
    auto g6 = build_grid(unit_model(), 1e6, GridResolution::standard());
    const double y_core = 10.0;
    int expected_tail = 0;
    {
        double h = y_core / 512, y = y_core;
        while (true) {
            h *= 1.02;
            if (y + 1.25 * h >= 1000.0) {
                ++expected_tail;
                break;
            }
            y += h;
            ++expected_tail;
        }
    }
    CHECK(g6->cell_count() == 512 + expected_tail);
    CHECK(g6->y[g6->cell_count()] == 1000.0);
}

TEST_CASE("oracle configuration has unit weight") {
    auto g = build_grid(unit_model(), 0.0, GridResolution::standard());
    CHECK(g->domain_end == 1.0);
    CHECK(g->log_w.abs().maxCoeff() == 0.0);
    CHECK(g->oracle_mode());
}

TEST_CASE("too coarse meshes are rejected") {
    CHECK_THROWS_AS(build_grid(unit_model(), 100.0, GridResolution::explicit_cells(32)),
                    ResolutionTooCoarse);
}

TEST_CASE("operator action on quadratics with unit weight") {
    auto g = build_grid(unit_model(), 0.0, GridResolution::standard());
    const DiscreteOperator op = assemble(g);
    const int n = g->cell_count();
    Vector v(n + 1);
    for (int i = 0; i <= n; ++i) v[i] = g->y[i] * g->y[i];
    const Vector got = op.apply(v);
    for (int i = 0; i < n; ++i) REQUIRE(got[i] == doctest::Approx(-4.0).epsilon(1e-7));
}

TEST_CASE("operator annihilates constants at interior rows") {
    auto g = build_grid(jet_model(), 100.0, GridResolution::standard());
    const DiscreteOperator op = assemble(g);
    const Vector ones = Vector::Constant(g->node_count(), 3.7);
    const Vector got = op.apply(ones);
    for (int i = 0; i < g->cell_count(); ++i) REQUIRE(std::abs(got[i]) <= 1e-9);
}

TEST_CASE("operator action under the strong advection weight") {
    // phi == 1 makes w = exp(y^2/2); on v = y^2 the action is -(4 + 2 y^2).
    auto g = build_grid(unit_model(), 100.0, GridResolution::standard());
    const DiscreteOperator op = assemble(g);
    const int n = g->cell_count();
    Vector v(n + 1);
    for (int i = 0; i <= n; ++i) v[i] = g->y[i] * g->y[i];
    const Vector got = op.apply(v);
    for (int i = 0; i < n; ++i) {
        const double expect = -(4.0 + 2.0 * g->y[i] * g->y[i]);
        REQUIRE(std::abs(got[i] - expect) <= 2e-4 * std::abs(expect));
    }
}

TEST_CASE("m-matrix sign pattern with shift and load") {
    auto g = build_grid(jet_model(), 1e4, GridResolution::standard());
    Vector load = Vector::Constant(g->node_count(), 0.3);
    const DiscreteOperator op = assemble(g, 2.5, load);
    for (int i = 0; i < g->cell_count(); ++i) {
        CHECK(op.diag[i] >= 0.0);
        CHECK(op.super[i] <= 0.0);
        if (i > 0) CHECK(op.sub[i - 1] <= 0.0);
    }
}

TEST_CASE("refinement halving is second order on smooth profiles") {
    const double e1 = truncation_error(jet_model(), 64.0, GridResolution::standard());
    const double e2 = truncation_error(jet_model(), 64.0, GridResolution::standard().refined());
    const double factor = e1 / e2;
    CHECK(factor >= 3.5);
    CHECK(factor <= 4.5);
}

TEST_CASE("refinement keeps at least first order on kinked custom profiles") {
    CustomProfileData d;
    d.r = {0.0, 0.25, 0.5, 0.75, 1.0};
    d.values = {1.0, 0.9, 0.5, 0.45, 0.4};
    auto model = std::make_shared<Model>(
        Nonlinearity::exponential(),
        FlowProfile(PhiSpec{PhiKind::Custom, 0.0, d}, PsiSpec{PsiKind::Constant}, 0.75));
    const double e1 = truncation_error(model, 64.0, GridResolution::standard());
    const double e2 = truncation_error(model, 64.0, GridResolution::standard().refined());
    CHECK(e1 / e2 >= 1.8);
}

TEST_CASE("disk eigenvalue against the bessel oracle") {
    const double j01 = oracles::bessel_j0_zero(1);
    const double j02 = oracles::bessel_j0_zero(2);
    const double expect = j01 * j01;

    auto fine = build_grid(unit_model(), 0.0, GridResolution::fine());
    const double ev_fine = dirichlet_eigen_estimate(*fine, 0);
    CHECK(std::abs(ev_fine - expect) <= 5e-3 * expect);

    auto coarse = build_grid(unit_model(), 0.0, GridResolution::explicit_cells(64));
    const double ev_coarse = dirichlet_eigen_estimate(*coarse, 0);
    CHECK(std::abs(ev_coarse - expect) <= 2e-2 * expect);

    const double ratio = dirichlet_eigen_estimate(*fine, 1) / ev_fine;
    const double expect_ratio = (j02 / j01) * (j02 / j01);
    CHECK(std::abs(ratio - expect_ratio) <= 1e-2 * expect_ratio);
}

TEST_CASE("scheme solve and apply are mutually consistent") {
    auto g = build_grid(jet_model(), 1e4, GridResolution::standard());
    const DiscreteOperator op = assemble(g);
    Vector load(g->node_count());
    for (int i = 0; i < g->node_count(); ++i)
        load[i] = g->psi_a[i] + g->m_a[i] * g->m_a[i] / g->alpha;
    const Vector z = op.solve(load, Vector::Zero(g->node_count()));
    const Vector res = flux_residual(*g, z, load);
    CHECK(res.cwiseAbs().maxCoeff() <= 1e-10 * load.cwiseAbs().maxCoeff());
}

TEST_CASE("grid dump has the documented columns") {
    auto g = build_grid(jet_model(), 100.0, GridResolution::explicit_cells(64));
    std::ostringstream out;
    dump_grid_csv(*g, out);
    const std::string s = out.str();
    CHECK(s.rfind("y,log_w,psi_a,phi_a\n", 0) == 0);
    CHECK(std::count(s.begin(), s.end(), '\n') == g->node_count() + 1);
}
