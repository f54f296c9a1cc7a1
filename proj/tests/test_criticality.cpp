#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "jetcrit/criticality.hpp"
#include "jetcrit/errors.hpp"
#include "oracles.hpp"

#include <cmath>
#include <memory>
#include <sstream>

using namespace jetcrit;

namespace {

std::shared_ptr<const Model> unit_model() {
    return std::make_shared<Model>(
        Nonlinearity::exponential(),
        FlowProfile(PhiSpec{PhiKind::Constant}, PsiSpec{PsiKind::Constant}, 0.75));
}

std::string serialize(const LambdaStarResult& r) {
    std::ostringstream s;
    s.precision(17);
    s << r.lambda_lo << '|' << r.lambda_hi << '|' << r.bisection_steps << '|'
      << r.kappa1_at_fold;
    for (const auto& step : r.log) s << '|' << step.lambda << ':' << static_cast<int>(step.status);
    return s.str();
}

}  // namespace

TEST_CASE("classical fold against the shooting oracle") {
    CriticalOptions opts;
    opts.companion_check = false;
    const LambdaStarResult res = find_lambda_star(unit_model(), 0.0, opts);

    const double fold = oracles::disk_fold();
    CHECK(std::abs(fold - 2.0) <= 2e-3);  // oracle self-validation
    CHECK(std::abs(res.lambda_star_estimate - fold) <= 0.01 * fold);
    CHECK(res.hi_verified);
    CHECK(res.lambda_lo < res.lambda_hi);
    CHECK((res.lambda_hi - res.lambda_lo) / res.lambda_lo <= 1e-3);
    CHECK(res.extremal.tag == ProfileTag::ExtremalCandidate);
}

TEST_CASE("coarse bracketing stays within the step budget") {
    CriticalOptions opts;
    opts.bracket_tol = 0.5;
    opts.companion_check = false;
    const LambdaStarResult res = find_lambda_star(unit_model(), 0.0, opts);
    CHECK(res.bisection_steps <= 6);
    CHECK((res.lambda_hi - res.lambda_lo) / res.lambda_lo <= 0.5);
}

TEST_CASE("identical inputs give identical brackets") {
    CriticalOptions opts;
    opts.companion_check = false;
    opts.bracket_tol = 5e-3;
    const LambdaStarResult a = find_lambda_star(unit_model(), 1e3, opts);
    const LambdaStarResult b = find_lambda_star(unit_model(), 1e3, opts);
    CHECK(serialize(a) == serialize(b));
    CHECK(a.lambda_lo == b.lambda_lo);  // bit-for-bit
}

TEST_CASE("sandwich between the certified bounds") {
    auto model = unit_model();
    const double alpha = 1e3;
    const UpperBoundResult ub = upper_bound(*model, alpha);
    auto grid = build_grid(model, alpha, GridResolution::standard());
    const CertificateContext ctx = make_certificate_context(grid);
    const LowerBoundResult lb = heuristic_lower_bound(*model, alpha, ctx);

    CriticalOptions opts;
    opts.companion_check = false;
    const LambdaStarResult res = find_lambda_star(model, alpha, opts);
    CHECK(lb.lambda_lb <= res.lambda_star_estimate);
    CHECK(res.lambda_star_estimate <= ub.lambda_ub);

    // A certificate must validate comfortably below the located fold.
    bool some_pass = false;
    for (double w : default_w_scan(alpha)) {
        const CertificateResult c =
            subsolution_certificate(*model, alpha, 0.8 * res.lambda_star_estimate, w, ctx);
        some_pass = some_pass || c.pass;
    }
    CHECK(some_pass);
}

TEST_CASE("companion resolution flags mesh sensitivity") {
    CriticalOptions opts;
    opts.bracket_tol = 1e-3;
    const LambdaStarResult res = find_lambda_star(unit_model(), 1e3, opts);
    CHECK(res.companion_ran);
    CHECK(res.companion_lambda_star > 0.0);
    // The two meshes agree here; the flag is informational.
    CHECK(std::abs(res.companion_lambda_star - res.lambda_star_estimate) <=
          0.05 * res.lambda_star_estimate);
}

TEST_CASE("extremal diagnostics of an injected zero profile") {
    auto model = unit_model();
    auto grid = build_grid(model, 1e3, GridResolution::standard());
    SolutionProfile zero;
    zero.grid = grid;
    zero.v = Vector::Zero(grid->node_count());
    zero.lambda = 1.0;
    zero.alpha = 1e3;
    const ExtremalDiagnostics d = profile_diagnostics(zero);
    CHECK(d.integral_u == 0.0);
    CHECK(d.lp_norm_1 == 0.0);
    // With v = 0 the reaction integral collapses onto f(0) ∫ psi.
    CHECK(std::abs(d.integral_psi_f - d.f0_integral_psi) <= 1e-4 * d.f0_integral_psi);
}

TEST_CASE("compact-support psi runs and is flagged experimental") {
    CustomProfileData d;
    d.r = {0.0, 0.3, 0.6, 1.0};
    d.values = {1.0, 0.5, 0.0, 0.0};
    auto model = std::make_shared<Model>(
        Nonlinearity::exponential(),
        FlowProfile(PhiSpec{PhiKind::Constant}, PsiSpec{PsiKind::Custom, d}, 0.75));
    CriticalOptions opts;
    opts.companion_check = false;
    opts.bracket_tol = 0.05;
    const LambdaStarResult res = find_lambda_star(model, 1e3, opts);
    CHECK(res.experimental_flow);
    CHECK(res.lambda_star_estimate > 0.0);
}
