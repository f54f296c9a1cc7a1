#pragma once

#include "jetcrit/criticality.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace jetcrit {

inline constexpr const char* kVersion = "0.1.0";

struct SweepConfig {
    nlohmann::json model_json;                // resolved model description
    std::vector<double> alphas;               // strictly increasing, >= 100
    std::vector<GridResolution> resolutions;  // one or two entries
    double bracket_tol = 1e-3;
    std::string out_dir = ".";
    int jobs = 1;
    unsigned seed = 12345;  // probe-grid property checks only

    void validate() const;
    nlohmann::json to_json() const;
    static SweepConfig from_json(const nlohmann::json& j);
    std::uint64_t hash() const;
};

struct SweepRow {
    double alpha = 0.0;
    double lambda_star = 0.0;
    double lambda_ub = 0.0;
    double lambda_lb = 0.0;
    double ratio = 0.0;  // lambda* log(alpha) / (2 k alpha)
    double u_center = 0.0;
    double integral_u = 0.0;
    double integral_psi_f = 0.0;
    double f0_integral_psi = 0.0;
    double kappa1_at_fold = 0.0;
    double capacity = 0.0;  // root of f'(A) = log alpha
    double center_over_capacity = 0.0;
    double lp1 = 0.0, lp2 = 0.0, lp4 = 0.0;

    // Not part of the CSV schema.
    double wall_ms = 0.0;  // manifest-only so reruns stay byte-identical
    double u_at_half = 0.0;
    double companion_lambda_star = 0.0;
    bool companion_disagrees = false;
    bool failed = false;
    std::string error;
};

/// Emitted CSV schema, in order.
extern const std::array<const char*, 15> kSweepColumns;

enum class Verdict { Pass, Fail, NotApplicable };

struct VerdictSummary {
    Verdict ratio_trend = Verdict::NotApplicable;            // |ratio-1| shrinking
    Verdict integral_u_decreasing = Verdict::NotApplicable;  // ∫ u* trend
    Verdict psi_f_excess = Verdict::NotApplicable;   // ∫psi f(u*) - f(0)∫psi > 0, shrinking
    Verdict center_increasing = Verdict::NotApplicable;
    Verdict capacity_band = Verdict::NotApplicable;  // u*(0)/A in a factor-3 band
    Verdict lp_decreasing = Verdict::NotApplicable;
    Verdict sandwich = Verdict::NotApplicable;  // lambda_lb <= lambda* <= lambda_ub per row

    bool any_fail() const;
    nlohmann::json to_json() const;
};

struct SweepTable {
    SweepConfig config;
    bool hypothesis_pass = false;  // growth hypothesis of the model
    std::vector<SweepRow> rows;
    VerdictSummary verdicts;
};

/// Full pipeline for one alpha: certified bounds, fold bracketing, stability
/// margin, extremal diagnostics.
SweepRow run_single_alpha(std::shared_ptr<const Model> model, double alpha,
                          const SweepConfig& cfg);

/// Runs the alpha sweep with a worker pool (rows stay ordered by alpha) and
/// evaluates the trend verdicts.
SweepTable run_sweep(const SweepConfig& cfg);

/// Trend verdicts with a 2% slack band; a pure function of the table data.
VerdictSummary evaluate_verdicts(const std::vector<SweepRow>& rows, bool hypothesis_pass);

std::string table_to_csv(const SweepTable& table);
nlohmann::json table_to_json(const SweepTable& table);
SweepTable table_from_json(const nlohmann::json& j);
nlohmann::json run_manifest(const SweepTable& table, const std::string& format);

/// Writes sweep.csv / sweep.json (per format) plus manifest.json.
void emit(const SweepTable& table, const std::string& out_dir, const std::string& format);

/// Canonical jet model: exponential reaction, gaussian velocity profile,
/// psi = phi^(2 Sc) with Sc = 0.75.
Model default_model();
nlohmann::json default_model_json();

/// Fast invariant suite (closed forms, transform round trips, stencil
/// validation, property probes). Prints one line per check; returns the
/// number of failures.
int selfcheck(std::ostream& out, unsigned seed);

}  // namespace jetcrit
