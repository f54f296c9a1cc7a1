#pragma once

#include "jetcrit/numerics.hpp"

#include <json.hpp>

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace jetcrit {

enum class NonlinearityKind { Exponential, Power, Custom };

/// Sampled nonlinearity with a declared power-law tail f(s) ~ f_n (s/s_n)^q
/// beyond the last sample. Derivative samples are required; curvature samples
/// are optional and only feed the growth-hypothesis check.
struct CustomNonlinearityData {
    std::vector<double> s;
    std::vector<double> f;
    std::vector<double> fprime;
    std::vector<double> fsecond;  // may be empty
    double tail_exponent = 2.0;
};

/// Reaction rate f: convex, non-decreasing, f(0) > 0, with integrable
/// reciprocal. Carries the g-transform cache (total mass k = ∫_0^∞ ds/f and a
/// Hermite table of g(v) = ∫_v^∞ ds/f used by the fast inverse).
class Nonlinearity {
public:
    static Nonlinearity exponential();
    static Nonlinearity power(double p);
    static Nonlinearity custom(CustomNonlinearityData data);

    NonlinearityKind kind() const { return kind_; }
    double power_exponent() const { return power_p_; }

    double value(double s) const;
    double deriv(double s) const;
    /// f''(s); nullopt for Custom kinds without curvature samples.
    std::optional<double> second_deriv(double s) const;
    bool has_second_deriv() const;

    /// Total reciprocal mass k = g(0). Throws DivergentIntegral when the
    /// declared tail is not integrable (Custom only).
    double k() const;

    /// g(v) = ∫_v^∞ ds/f(s) by adaptive quadrature (authoritative path).
    double g(double v) const;
    /// Table-backed g, within ~1e-11·k of the quadrature path.
    double g_fast(double v) const;
    /// Inverse of g on (0, k]; throws OutOfRange outside that interval.
    double g_inverse(double gval) const;

    nlohmann::json to_json() const;

private:
    Nonlinearity() = default;
    void validate() const;
    void ensure_cache() const;
    double tail_g(double v) const;       // closed-form ∫_v^∞ for large v
    double tail_g_inverse(double gval) const;

    NonlinearityKind kind_ = NonlinearityKind::Exponential;
    double power_p_ = 0.0;
    CustomNonlinearityData data_;

    struct CustomInterp;
    std::shared_ptr<const CustomInterp> interp_;  // Custom kind only

    struct Cache;
    mutable std::shared_ptr<const Cache> cache_;
    mutable std::shared_ptr<std::once_flag> cache_once_;
};

enum class PhiKind { Gaussian, Schlichting, Constant, Custom };
enum class PsiKind { PowerOfPhi, Constant, Custom };

struct CustomProfileData {
    std::vector<double> r;       // increasing, r.front() == 0, r.back() == 1
    std::vector<double> values;  // piecewise-linear samples
};

struct PhiSpec {
    PhiKind kind = PhiKind::Gaussian;
    double gauss_a = 4.0;
    CustomProfileData data;
};

struct PsiSpec {
    PsiKind kind = PsiKind::PowerOfPhi;
    CustomProfileData data;
};

/// Velocity profile phi and concentration-product profile psi on [0, 1],
/// both non-increasing Lipschitz with phi(0) = psi(0) = 1 and phi > 0 on
/// [0, 1). Builds the running ratio-max table and its integral eagerly.
class FlowProfile {
public:
    FlowProfile(PhiSpec phi, PsiSpec psi, double sc = 0.75);

    double phi(double r) const;
    double log_phi(double r) const;
    double psi(double r) const;
    double sc() const { return sc_; }
    const PhiSpec& phi_spec() const { return phi_; }
    const PsiSpec& psi_spec() const { return psi_; }

    /// M(s) = max over [0, s] of psi/phi.
    double ratio_max(double s) const;
    /// m = ∫_0^1 M(s) ds.
    double ratio_max_integral() const { return m_; }

    /// F1(r) = ∫_0^r s phi(s) ds (closed form except for Custom phi, where the
    /// interpolant is integrated segment-exactly).
    double phi_cumulative(double r) const;

    /// True when psi hits zero strictly inside (0, 1); criticality search on
    /// such profiles is flagged experimental.
    bool psi_vanishes_interior() const { return psi_vanishes_interior_; }

    nlohmann::json to_json() const;

private:
    void validate() const;
    void build_ratio_table();
    double ratio(double r) const;

    PhiSpec phi_;
    PsiSpec psi_;
    double sc_ = 0.75;
    double m_ = 0.0;
    bool psi_vanishes_interior_ = false;
    std::vector<double> ratio_prefix_max_;  // on a uniform scan grid
    std::vector<double> phi_cumulative_table_;  // Custom phi only
};

/// Immutable model bundle; all caches are built at construction, so instances
/// are safe to share across worker threads.
class Model {
public:
    Model(Nonlinearity nl, FlowProfile flow);

    const Nonlinearity& nonlinearity() const { return nl_; }
    const FlowProfile& flow() const { return flow_; }
    double k() const { return k_; }
    double m() const { return flow_.ratio_max_integral(); }

    static Model from_json(const nlohmann::json& j);
    static Model from_json_file(const std::string& path);
    nlohmann::json to_json() const;

private:
    Nonlinearity nl_;
    FlowProfile flow_;
    double k_ = 0.0;
};

// Operation aliases over the domain types.

double compute_k(const Nonlinearity& nl);
double g_forward(const Nonlinearity& nl, double v);
double g_inverse(const Nonlinearity& nl, double gval);
double ratio_max(const FlowProfile& flow, double s);
double ratio_max_integral(const FlowProfile& flow);

/// log mu(r) = alpha ∫_0^r s phi(s) ds; mu spans hundreds of orders of
/// magnitude for large alpha, so the log form is the primary surface.
double log_advection_weight(const FlowProfile& flow, double alpha, double r);
double advection_weight(const FlowProfile& flow, double alpha, double r);

}  // namespace jetcrit
