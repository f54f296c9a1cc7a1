#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "jetcrit/bounds.hpp"
#include "jetcrit/errors.hpp"
#include "oracles.hpp"

#include <cmath>
#include <memory>

using namespace jetcrit;

namespace {

std::shared_ptr<const Model> unit_model(double p = 0.0) {
    Nonlinearity nl = p > 0.0 ? Nonlinearity::power(p) : Nonlinearity::exponential();
    return std::make_shared<Model>(
        std::move(nl), FlowProfile(PhiSpec{PhiKind::Constant}, PsiSpec{PsiKind::Constant}, 0.75));
}

}  // namespace

TEST_CASE("chord bound is trivial for constant psi") {
    const UpperBoundResult ub = upper_bound(*unit_model(), 1e4);
    CHECK(ub.h == 1.0);
    CHECK(!ub.degenerate);
}

TEST_CASE("chord bound for a decaying psi stays interior") {
    auto jet = std::make_shared<Model>(
        Nonlinearity::exponential(),
        FlowProfile(PhiSpec{PhiKind::Gaussian, 4.0}, PsiSpec{PsiKind::PowerOfPhi}, 0.75));
    const UpperBoundResult ub = upper_bound(*jet, 1e4);
    CHECK(ub.h > 0.01);
    CHECK(ub.h < 1.0);
    // validity of the chord at dense probe points
    for (int j = 0; j <= 4096; ++j) {
        const double r = j / 4096.0;
        CHECK(jet->flow().psi(r) >= 1.0 - r / ub.h - 1e-9);
    }
}

TEST_CASE("second quadrature never exceeds one") {
    for (double alpha : {1e2, 1e3, 1e4, 1e5, 1e6}) {
        const UpperBoundResult ub = upper_bound(*unit_model(), alpha);
        CHECK(ub.j2 <= 1.0 + 1e-12);
    }
}

TEST_CASE("upper bound composition against the midpoint oracle") {
    auto model = unit_model();
    const double alpha = 1e4;
    const UpperBoundResult ub = upper_bound(*model, alpha);
    const double cut = ub.h * std::sqrt(alpha);
    const double j1 = oracles::midpoint_integral(
        [](double y) { return -std::expm1(-0.5 * y * y) / y; }, 1e-9, cut, 2000000);
    const double j2 = oracles::midpoint_integral(
                          [](double y) { return -std::expm1(-0.5 * y * y); }, 0.0, cut, 2000000) /
                      cut;
    const double composed = model->k() * alpha / (j1 - j2);
    CHECK(std::abs(ub.lambda_ub - composed) <= 1e-6 * composed);

    // Analytic floor of the first quadrature.
    const double c0 = oracles::midpoint_integral(
        [](double y) { return std::exp(-0.5 * y * y) / y; }, 1.0, 60.0, 2000000);
    CHECK(ub.j1 >= 0.5 * std::log(alpha) + std::log(ub.h) - c0 - 1e-8 * ub.j1);
}

TEST_CASE("upper bound requires a strong enough flow") {
    CHECK_THROWS_AS(upper_bound(*unit_model(), 5.0), OutOfRange);
}

TEST_CASE("certificate accepts deep-subcritical loads and rejects super-bound ones") {
    auto model = unit_model();
    const double alpha = 1e4;
    const UpperBoundResult ub = upper_bound(*model, alpha);
    auto grid = build_grid(model, alpha, GridResolution::standard());
    const CertificateContext ctx = make_certificate_context(grid);
    const double w = std::log(std::log(alpha));

    const CertificateResult easy =
        subsolution_certificate(*model, alpha, 1e-3 * ub.lambda_ub, w, ctx);
    CHECK(easy.pass);
    CHECK(easy.margin > 0.0);
    REQUIRE(easy.witness.size() == grid->node_count());
    // witness is increasing and floored by epsilon_w
    for (int i = 0; i + 1 < grid->node_count(); ++i)
        CHECK(easy.witness[i + 1] >= easy.witness[i] - 1e-14);
    CHECK(easy.witness[0] >= easy.epsilon_w - 1e-12);

    // f' evaluated through the inverse transform respects the floor ordering.
    const Nonlinearity& nl = model->nonlinearity();
    CHECK(nl.deriv(nl.g_inverse(easy.witness[0])) <= nl.deriv(w) + 1e-9);

    const CertificateResult hard =
        subsolution_certificate(*model, alpha, 2.0 * ub.lambda_ub, w, ctx);
    CHECK(!hard.pass);
}

TEST_CASE("certificate witness re-verifies on a finer mesh") {
    auto model = unit_model();
    const double alpha = 1e4;
    auto grid = build_grid(model, alpha, GridResolution::standard());
    const CertificateContext ctx = make_certificate_context(grid);
    const double w = 2.0;
    const UpperBoundResult ub = upper_bound(*model, alpha);
    const double lambda = 0.2 * ub.lambda_ub;
    const CertificateResult cert = subsolution_certificate(*model, alpha, lambda, w, ctx);
    REQUIRE(cert.pass);

    auto fine = build_grid(model, alpha, GridResolution::standard().refined());
    const CertificateContext fine_ctx = make_certificate_context(fine);
    CHECK(verify_certificate(*model, lambda, w, cert.beta, fine_ctx) >= -1e-9);
}

TEST_CASE("heuristic lower bound stays under the certified upper bound") {
    auto model = unit_model();
    const double alpha = 1e4;
    const UpperBoundResult ub = upper_bound(*model, alpha);
    auto grid = build_grid(model, alpha, GridResolution::standard());
    const CertificateContext ctx = make_certificate_context(grid);
    const LowerBoundResult lb = heuristic_lower_bound(*model, alpha, ctx);
    CHECK(lb.any_pass);
    CHECK(lb.lambda_lb > 0.0);
    CHECK(lb.lambda_lb <= ub.lambda_ub);

    // Scan of size one equals the single-w evaluation.
    const LowerBoundResult single = heuristic_lower_bound(*model, alpha, ctx, {2.0});
    REQUIRE(single.per_w.size() == 1);
    CHECK(single.lambda_lb == single.per_w[0].second);
    CHECK(single.w_best == 2.0);
}

TEST_CASE("largest theta root closed forms") {
    // e^t/t has its minimum e at t = 1: a double root of the level e.
    const double alpha_ee = std::exp(std::exp(1.0));
    CHECK(std::abs(theta_star(*unit_model(), alpha_ee, 1.0) - 1.0) <= 1e-6);

    // (1+t)^2/t = 4 collapses to (t-1)^2 = 0.
    const double alpha_e4 = std::exp(4.0);
    CHECK(std::abs(theta_star(*unit_model(2.0), alpha_e4, 1.0) - 1.0) <= 1e-6);

    // Level strictly below the minimum has no root.
    CHECK_THROWS_AS(theta_star(*unit_model(), std::exp(2.0), 1.0), NoRoot);
}

TEST_CASE("theta root shrinks against the quarter power") {
    auto model = unit_model();
    double prev = 1.0;
    for (double alpha : {1e4, 1e5, 1e6}) {
        const double th = theta_star(*model, alpha, 1.0);
        const double q = th / std::pow(alpha, 0.25);
        CHECK(q < 1.0);
        CHECK(q < prev + 1e-12);
        prev = q;
    }
}

TEST_CASE("capacity closed forms") {
    CHECK(std::abs(capacity_a(*unit_model(), 1e4, 1.0) - std::log(std::log(1e4))) <= 1e-10);
    // 2 (1 + A) = 8 at c log alpha = 8.
    CHECK(std::abs(capacity_a(*unit_model(2.0), std::exp(4.0), 2.0) - 3.0) <= 1e-10);

    // Near-unit exponent: the root is enormous but still bracketed.
    auto near1 = unit_model(1.01);
    const double target = std::log(1e6);
    const double expect = std::pow(target / 1.01, 1.0 / 0.01) - 1.0;
    const double got = capacity_a(*near1, 1e6, 1.0);
    CHECK(std::abs(got - expect) <= 1e-6 * expect);
}

TEST_CASE("growth hypothesis verdicts") {
    const HypothesisVerdicts he = check_growth_hypothesis(*unit_model());
    CHECK(he.direct_pass);
    CHECK(he.curvature_route == RouteVerdict::Pass);
    CHECK(growth_hypothesis_single(unit_model()->nonlinearity(), 1.0 / 3.0, 4.0, 1.0));

    const HypothesisVerdicts hp2 = check_growth_hypothesis(*unit_model(2.0));
    CHECK(hp2.direct_pass);
    CHECK(hp2.curvature_route == RouteVerdict::Fail);  // constant curvature

    const HypothesisVerdicts hp3 = check_growth_hypothesis(*unit_model(3.0));
    CHECK(hp3.direct_pass);
    CHECK(hp3.curvature_route == RouteVerdict::Pass);
}

TEST_CASE("exponential-case envelope") {
    const double alpha = std::exp(std::exp(4.0));
    const ExpCaseReport rep = exp_case_report(alpha);
    CHECK(rep.correction == doctest::Approx(std::exp(-2.0)));
    CHECK(rep.lambda_center == doctest::Approx(2.0 * alpha / std::exp(4.0)));

    // Envelope grows beyond alpha = e^e (dense sampling of the lower edge).
    double prev = 0.0;
    for (int j = 0; j <= 200; ++j) {
        const double a = std::exp(std::exp(1.0)) * std::pow(10.0, 6.0 * j / 200.0);
        const ExpCaseReport r = exp_case_report(a);
        const double lower = r.lambda_center * (1.0 - r.correction);
        CHECK(lower >= prev - 1e-12);
        prev = lower;
    }

    // Pairwise ratio structure of the envelope centre.
    const ExpCaseReport r1 = exp_case_report(1e4);
    const ExpCaseReport r2 = exp_case_report(1e6);
    CHECK(r1.lambda_center / r2.lambda_center ==
          doctest::Approx((1e4 / 1e6) * (std::log(1e6) / std::log(1e4))));
}

TEST_CASE("bounds report serialises") {
    auto model = unit_model();
    const BoundsReport rep = bounds_report(model, 1e3);
    const nlohmann::json j = rep.to_json();
    CHECK(j.at("alpha").get<double>() == 1e3);
    CHECK(j.at("lambda_lb").get<double>() <= j.at("lambda_ub").get<double>());
    CHECK(j.at("growth_hypothesis").at("direct").get<std::string>() == "pass");
    CHECK(j.contains("lambda_lb_formula_c1_nonrigorous"));
}
