#pragma once

#include "jetcrit/grid.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace jetcrit {

/// Certified upper bound lambda <= k alpha / (J1 - J2) built from the chord
/// bound h on psi and two explicit quadratures.
struct UpperBoundResult {
    double alpha = 0.0;
    double lambda_ub = 0.0;  // +inf (flagged) when J1 <= J2
    double j1 = 0.0;
    double j2 = 0.0;
    double h = 0.0;
    bool degenerate = false;
};

UpperBoundResult upper_bound(const Model& model, double alpha);

/// Per-grid data reused by every certificate: the response z of the linear
/// comparison problem with load psi_a + M_a^2/alpha (zero boundary value) and
/// its flux-reconstructed derivative.
struct CertificateContext {
    std::shared_ptr<const RadialGrid> grid;
    Vector load;    // psi_a + M_a^2 / alpha at the nodes
    Vector z;       // decreasing, z[N] = 0
    Vector zprime;  // <= 0, zprime[0] = 0
};

CertificateContext make_certificate_context(std::shared_ptr<const RadialGrid> grid);

struct CertificateResult {
    bool pass = false;
    double w = 0.0;
    double epsilon_w = 0.0;  // g(w), the positivity floor
    double beta = 0.0;       // feasible load scale found by the scalar search
    double margin = 0.0;     // worst pointwise slack at the found beta
    double beta_asymptotic_c1 = 0.0;  // asymptotic formula with c = 1 (non-rigorous)
    Vector witness;              // increasing discrete witness, empty on fail
    std::string fail_reason;
};

/// Searches the scalar load level beta for a discrete increasing witness
/// satisfying (i) the positivity floor g(w), (ii) monotonicity, and (iii) the
/// pointwise comparison inequality at every node. A pass certifies existence
/// of a discrete minimal solution at this lambda.
CertificateResult subsolution_certificate(const Model& model, double alpha, double lambda,
                                          double w, const CertificateContext& ctx);

/// Re-checks a found witness (same w, beta) on a different grid; returns the
/// worst pointwise margin (>= 0 means the witness still verifies).
double verify_certificate(const Model& model, double lambda, double w, double beta,
                          const CertificateContext& ctx);

struct LowerBoundResult {
    double lambda_lb = 0.0;  // 0 (flagged) when no w in the scan certifies
    double w_best = 0.0;
    double beta_best = 0.0;
    double epsilon_w_best = 0.0;
    bool any_pass = false;
    std::vector<std::pair<double, double>> per_w;  // (w, certified lambda)
    double lambda_lb_asymptotic_c1 = 0.0;  // asymptotic formula with c = 1 (non-rigorous)
};

std::vector<double> default_w_scan(double alpha);

LowerBoundResult heuristic_lower_bound(const Model& model, double alpha,
                                       const CertificateContext& ctx,
                                       std::vector<double> w_scan = {});

/// Largest root of f(theta)/theta = c log alpha (descending scan; the
/// equation may have a tangential double root). Throws NoRoot.
double theta_star(const Model& model, double alpha, double c);

/// Root of f'(A) = c log alpha. Throws DerivativeBounded when f' never
/// reaches the target.
double capacity_a(const Model& model, double alpha, double c);

enum class RouteVerdict { Pass, Fail, NotApplicable };

struct HypothesisVerdicts {
    bool direct_pass = false;
    double c0 = 0.0, c1 = 0.0, t0 = 0.0;  // witnessing constants when direct_pass
    RouteVerdict curvature_route = RouteVerdict::NotApplicable;
};

/// Checks the uniform growth hypothesis (f(t2) >= c1 f(t1) forcing
/// (1 - c0) f'(t2) >= f'(t1)) by a direct lattice scan, plus the sufficient
/// curvature route (f'' > 0 and strictly increasing) when curvature data is
/// available.
HypothesisVerdicts check_growth_hypothesis(const Model& model);

/// Single (c0, c1, t0) candidate of the direct scan.
bool growth_hypothesis_single(const Nonlinearity& nl, double c0, double c1, double t0);

struct ExpCaseReport {
    double alpha = 0.0;
    double lambda_center = 0.0;   // 2 alpha / log alpha
    double correction = 0.0;      // 1 / sqrt(log alpha)
    double u_center_scale = 0.0;  // log log alpha
};

/// Predicted exponential-case envelope for comparison against measured
/// criticality data (the comparison itself lives in the harness).
ExpCaseReport exp_case_report(double alpha);

struct BoundsReport {
    double alpha = 0.0;
    UpperBoundResult upper;
    LowerBoundResult lower;
    std::optional<double> theta_star_c1;
    bool theta_star_within_quarter_power = false;
    std::optional<double> capacity_c1;
    HypothesisVerdicts hypothesis;

    nlohmann::json to_json() const;
};

BoundsReport bounds_report(std::shared_ptr<const Model> model, double alpha,
                           const GridResolution& res = GridResolution::standard());

}  // namespace jetcrit
