#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "jetcrit/errors.hpp"
#include "jetcrit/numerics.hpp"
#include "oracles.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>

using namespace jetcrit;

TEST_CASE("improper exponential integral") {
    QuadratureOptions opts;
    opts.rel_tol = 1e-12;
    const auto r = integrate_to_infinity([](double s) { return std::exp(-s); }, 0.0, opts);
    CHECK(std::abs(r.value - 1.0) <= 1e-10);
}

TEST_CASE("kinked mass integrand against the midpoint oracle") {
    auto f = [](double y) { return -std::expm1(-0.5 * y * y) / y; };
    const double ref = oracles::midpoint_integral(f, 1e-12, 1.0, 1000000);
    const auto r = integrate(f, 0.0, 1.0, {});
    CHECK(std::abs(r.value - ref) <= 1e-7 * std::abs(ref));
}

TEST_CASE("zero integrand") {
    const auto r = integrate([](double) { return 0.0; }, 0.0, 1.0, {});
    CHECK(r.value == 0.0);
}

TEST_CASE("quadrature is deterministic") {
    auto f = [](double s) { return std::exp(-s) * std::cos(3.0 * s); };
    const auto a = integrate(f, 0.0, 40.0, {});
    const auto b = integrate(f, 0.0, 40.0, {});
    CHECK(a.value == b.value);
    CHECK(a.error_estimate == b.error_estimate);
}

TEST_CASE("non-finite samples are rejected") {
    CHECK_THROWS_AS(integrate([](double s) { return 1.0 / (s - 0.5); }, 0.0, 1.0, {}),
                    NonFiniteSample);
}

TEST_CASE("bracketed root basics") {
    CHECK(bracket_root([](double x) { return x - 2.0; }, 0.0, 5.0) == doctest::Approx(2.0));
    CHECK_THROWS_AS(bracket_root([](double x) { return x * x; }, -1.0, 1.0), NoSignChange);
}

TEST_CASE("largest-root scan resolves the tangential level") {
    // e^t/t dips to its minimum e exactly once; the level e is a double root.
    auto g = [](double t) { return std::exp(t) / t - std::exp(1.0); };
    const auto root = largest_root_scan(g, 0.5, 10.0, 8192, 1e-9 * std::exp(1.0));
    REQUIRE(root.has_value());
    CHECK(std::abs(*root - 1.0) <= 1e-5);

    // Dense-scan oracle: the function stays positive away from t = 1.
    double min_away = 1e300;
    for (int j = 0; j <= 100000; ++j) {
        const double t = 0.5 + 9.5 * j / 100000.0;
        if (std::abs(t - 1.0) > 0.05) min_away = std::min(min_away, g(t));
    }
    CHECK(min_away > 1e-3);
}

TEST_CASE("thomas solve: identity and the 3-point laplacian") {
    TridiagonalSystem id;
    id.diag = Vector::Ones(4);
    id.sub = Vector::Zero(3);
    id.super = Vector::Zero(3);
    id.rhs = Vector::LinSpaced(4, 1.0, 4.0);
    CHECK((solve_tridiagonal(id) - id.rhs).cwiseAbs().maxCoeff() == 0.0);

    TridiagonalSystem lap;
    lap.diag = Vector::Constant(3, 2.0);
    lap.sub = Vector::Constant(2, -1.0);
    lap.super = Vector::Constant(2, -1.0);
    Vector x(3);
    x << 0.3, -1.2, 2.5;
    lap.rhs.resize(3);
    lap.rhs[0] = 2 * x[0] - x[1];
    lap.rhs[1] = -x[0] + 2 * x[1] - x[2];
    lap.rhs[2] = -x[1] + 2 * x[2];
    CHECK((solve_tridiagonal(lap) - x).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("thomas solve rejects a zero pivot") {
    TridiagonalSystem sys;
    sys.diag = Vector::Zero(3);
    sys.sub = Vector::Zero(2);
    sys.super = Vector::Zero(2);
    sys.rhs = Vector::Ones(3);
    CHECK_THROWS_AS(solve_tridiagonal(sys), SingularPivot);
}

TEST_CASE("thomas solve matches dense elimination on random dominant systems") {
    std::mt19937 rng(20240211u);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 63);
        TridiagonalSystem sys;
        sys.diag.resize(n);
        sys.rhs.resize(n);
        sys.sub.resize(n - 1);
        sys.super.resize(n - 1);
        Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < n; ++i) {
            sys.diag[i] = 2.5 + uni(rng);
            sys.rhs[i] = uni(rng);
            dense(i, i) = sys.diag[i];
        }
        for (int i = 0; i + 1 < n; ++i) {
            sys.sub[i] = uni(rng);
            sys.super[i] = uni(rng);
            dense(i + 1, i) = sys.sub[i];
            dense(i, i + 1) = sys.super[i];
        }
        const Vector got = solve_tridiagonal(sys);
        const Vector ref = dense.fullPivLu().solve(sys.rhs);
        REQUIRE((got - ref).cwiseAbs().maxCoeff() <=
                1e-10 * (1.0 + ref.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("symmetric tridiagonal eigenvalues of the discrete laplacian") {
    // Eigenvalues 2 - 2 cos(k pi / (n+1)) are classical.
    const int n = 40;
    Vector diag = Vector::Constant(n, 2.0);
    Vector off = Vector::Constant(n - 1, -1.0);
    for (int k = 0; k < 3; ++k) {
        const double expect = 2.0 - 2.0 * std::cos((k + 1) * M_PI / (n + 1));
        const auto eig = sym_tridiag_eigen(diag, off, k, k == 0);
        CHECK(std::abs(eig.value - expect) <= 1e-12);
        if (k == 0) {
            CHECK(eig.residual <= 1e-10);
            CHECK(eig.vector.minCoeff() > 0.0);  // principal mode
        }
    }
}
