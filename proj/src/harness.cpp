#include "jetcrit/harness.hpp"

#include "jetcrit/errors.hpp"
#include "jetcrit/stability.hpp"

#include <Eigen/Dense>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

namespace jetcrit {

const std::array<const char*, 15> kSweepColumns = {
    "alpha",         "lambda_star",    "lambda_ub",       "lambda_lb",
    "ratio",         "u_center",       "integral_u",      "integral_psi_f",
    "f0_integral_psi", "kappa1_at_fold", "capacity",        "center_over_capacity",
    "lp1",           "lp2",            "lp4"};

void SweepConfig::validate() const {
    if (alphas.empty()) throw ConfigError("sweep requires a non-empty alpha list");
    for (std::size_t i = 0; i + 1 < alphas.size(); ++i)
        if (!(alphas[i + 1] > alphas[i]))
            throw ConfigError("sweep alpha list must be strictly increasing");
    for (double a : alphas)
        if (!(a >= 100.0))
            throw ConfigError("sweep requires alpha >= 100 (the certified bounds need it)");
    if (resolutions.empty() || resolutions.size() > 2)
        throw ConfigError("sweep takes one or two resolutions");
    if (jobs < 1) throw ConfigError("sweep requires jobs >= 1");
    if (!(bracket_tol > 0.0 && bracket_tol < 1.0))
        throw ConfigError("bracket tolerance must lie in (0, 1)");
    if (model_json.is_null()) throw ConfigError("sweep requires a model");
}

nlohmann::json SweepConfig::to_json() const {
    nlohmann::json j;
    j["model"] = model_json;
    j["alphas"] = alphas;
    nlohmann::json res = nlohmann::json::array();
    for (const auto& r : resolutions)
        res.push_back({{"core_cells", r.core_cells}, {"stretch", r.stretch}});
    j["resolutions"] = res;
    j["bracket_tol"] = bracket_tol;
    j["jobs"] = jobs;
    j["seed"] = seed;
    return j;
}

SweepConfig SweepConfig::from_json(const nlohmann::json& j) {
    SweepConfig cfg;
    cfg.model_json = j.at("model");
    cfg.alphas = j.at("alphas").get<std::vector<double>>();
    for (const auto& r : j.at("resolutions"))
        cfg.resolutions.push_back(
            {r.at("core_cells").get<int>(), r.at("stretch").get<double>()});
    cfg.bracket_tol = j.at("bracket_tol").get<double>();
    cfg.jobs = j.at("jobs").get<int>();
    cfg.seed = j.at("seed").get<unsigned>();
    return cfg;
}

std::uint64_t SweepConfig::hash() const {
    const std::string s = to_json().dump();
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

SweepRow run_single_alpha(std::shared_ptr<const Model> model, double alpha,
                          const SweepConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    SweepRow row;
    row.alpha = alpha;
    try {
        const UpperBoundResult ub = upper_bound(*model, alpha);
        auto grid = build_grid(model, alpha, cfg.resolutions.front());
        const CertificateContext ctx = make_certificate_context(grid);
        const LowerBoundResult lb = heuristic_lower_bound(*model, alpha, ctx);

        CriticalOptions copts;
        copts.resolution = cfg.resolutions.front();
        copts.bracket_tol = cfg.bracket_tol;
        copts.companion_check = cfg.resolutions.size() == 1;
        const double hi_seed = ub.degenerate ? 4.0 * model->k() * alpha : 1.2 * ub.lambda_ub;
        copts.seed = {lb.any_pass ? 0.5 * lb.lambda_lb : 1e-3 * hi_seed, hi_seed};
        LambdaStarResult crit = find_lambda_star(model, alpha, copts);

        if (cfg.resolutions.size() == 2) {
            CriticalOptions copts2 = copts;
            copts2.resolution = cfg.resolutions[1];
            copts2.companion_check = false;
            copts2.seed = {0.5 * crit.lambda_lo, 2.0 * crit.lambda_hi};
            const LambdaStarResult crit2 = find_lambda_star(model, alpha, copts2);
            crit.companion_ran = true;
            crit.companion_lambda_star = crit2.lambda_star_estimate;
            crit.companion_disagrees =
                std::abs(crit2.lambda_star_estimate - crit.lambda_star_estimate) >
                2.0 * cfg.bracket_tol * crit.lambda_star_estimate;
        }

        const ExtremalDiagnostics diag = extremal_diagnostics(crit);

        row.lambda_star = crit.lambda_star_estimate;
        row.lambda_ub = ub.lambda_ub;
        row.lambda_lb = lb.lambda_lb;
        row.ratio = crit.lambda_star_estimate * std::log(alpha) / (2.0 * model->k() * alpha);
        row.u_center = diag.center;
        row.integral_u = diag.integral_u;
        row.integral_psi_f = diag.integral_psi_f;
        row.f0_integral_psi = diag.f0_integral_psi;
        row.kappa1_at_fold = crit.kappa1_at_fold;
        try {
            row.capacity = capacity_a(*model, alpha, 1.0);
            row.center_over_capacity = row.capacity > 0.0 ? diag.center / row.capacity : 0.0;
        } catch (const DerivativeBounded&) {
            row.capacity = std::numeric_limits<double>::quiet_NaN();
            row.center_over_capacity = std::numeric_limits<double>::quiet_NaN();
        }
        row.lp1 = diag.lp_norm_1;
        row.lp2 = diag.lp_norm_2;
        row.lp4 = diag.lp_norm_4;
        row.u_at_half = diag.u_at_half;
        row.companion_lambda_star = crit.companion_lambda_star;
        row.companion_disagrees = crit.companion_disagrees;

        if (!(row.ratio > 0.0 && row.ratio < 2.0))
            throw NumericalError("ratio left the sanity envelope (0, 2)");
    } catch (const std::exception& e) {
        row.failed = true;
        row.error = e.what();
    }
    row.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return row;
}

SweepTable run_sweep(const SweepConfig& cfg) {
    cfg.validate();
    auto model = std::make_shared<Model>(Model::from_json(cfg.model_json));

    SweepTable table;
    table.config = cfg;
    table.rows.resize(cfg.alphas.size());

    const int jobs = std::min<int>(cfg.jobs, static_cast<int>(cfg.alphas.size()));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next.fetch_add(1); k < cfg.alphas.size(); k = next.fetch_add(1))
            table.rows[k] = run_single_alpha(model, cfg.alphas[k], cfg);
    };
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    table.hypothesis_pass = check_growth_hypothesis(*model).direct_pass;
    table.verdicts = evaluate_verdicts(table.rows, table.hypothesis_pass);
    return table;
}

namespace {

constexpr double kSlack = 0.02;

Verdict trend(const std::vector<double>& v, bool increasing, bool require_positive = false) {
    if (v.size() < 2) return Verdict::NotApplicable;
    for (std::size_t k = 0; k + 1 < v.size(); ++k) {
        if (require_positive && !(v[k] > 0.0)) return Verdict::Fail;
        const bool ok = increasing ? v[k + 1] >= v[k] * (1.0 - kSlack) - 1e-300
                                   : v[k + 1] <= v[k] * (1.0 + kSlack) + 1e-300;
        if (!ok) return Verdict::Fail;
    }
    if (require_positive && !(v.back() > 0.0)) return Verdict::Fail;
    return Verdict::Pass;
}

}  // namespace

VerdictSummary evaluate_verdicts(const std::vector<SweepRow>& all_rows, bool hypothesis_pass) {
    std::vector<SweepRow> rows;
    for (const auto& r : all_rows)
        if (!r.failed) rows.push_back(r);

    VerdictSummary out;
    if (rows.empty()) return out;

    auto col = [&](auto&& get) {
        std::vector<double> v;
        v.reserve(rows.size());
        for (const auto& r : rows) v.push_back(get(r));
        return v;
    };

    // Ratio trend asks for |ratio - 1| to shrink across the grid. The exact
    // limit is not reachable at desk scale, so deviations that already sit
    // inside the slack band count as converged; ordering is only demanded
    // above the band.
    {
        const auto dev = col([](const SweepRow& r) { return std::abs(r.ratio - 1.0); });
        if (dev.size() < 2) {
            out.ratio_trend = Verdict::NotApplicable;
        } else {
            Verdict t = Verdict::Pass;
            for (std::size_t k = 0; k + 1 < dev.size(); ++k)
                if (!(dev[k + 1] <= std::max(dev[k] * (1.0 + kSlack), kSlack)))
                    t = Verdict::Fail;
            if (t == Verdict::Pass && dev.front() > kSlack && !(dev.back() < dev.front()))
                t = Verdict::Fail;
            out.ratio_trend = t;
        }
    }
    out.integral_u_decreasing = trend(col([](const SweepRow& r) { return r.integral_u; }), false);
    out.psi_f_excess = trend(
        col([](const SweepRow& r) { return r.integral_psi_f - r.f0_integral_psi; }), false, true);
    out.center_increasing = trend(col([](const SweepRow& r) { return r.u_center; }), true);

    if (!hypothesis_pass) {
        out.capacity_band = Verdict::NotApplicable;
    } else {
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        bool ok = true;
        for (const auto& r : rows) {
            if (!std::isfinite(r.center_over_capacity)) ok = false;
            lo = std::min(lo, r.center_over_capacity);
            hi = std::max(hi, r.center_over_capacity);
        }
        if (rows.size() < 2)
            out.capacity_band = Verdict::NotApplicable;
        else
            out.capacity_band = (ok && hi <= 3.0 * lo) ? Verdict::Pass : Verdict::Fail;
    }

    const Verdict l1 = trend(col([](const SweepRow& r) { return r.lp1; }), false);
    const Verdict l2 = trend(col([](const SweepRow& r) { return r.lp2; }), false);
    const Verdict l4 = trend(col([](const SweepRow& r) { return r.lp4; }), false);
    if (l1 == Verdict::NotApplicable)
        out.lp_decreasing = Verdict::NotApplicable;
    else
        out.lp_decreasing = (l1 == Verdict::Pass && l2 == Verdict::Pass && l4 == Verdict::Pass)
                                ? Verdict::Pass
                                : Verdict::Fail;

    out.sandwich = Verdict::Pass;
    for (const auto& r : rows)
        if (!(r.lambda_lb <= r.lambda_star && r.lambda_star <= r.lambda_ub))
            out.sandwich = Verdict::Fail;
    return out;
}

bool VerdictSummary::any_fail() const {
    for (Verdict v : {ratio_trend, integral_u_decreasing, psi_f_excess, center_increasing,
                      capacity_band, lp_decreasing, sandwich})
        if (v == Verdict::Fail) return true;
    return false;
}

namespace {

const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Pass:
            return "pass";
        case Verdict::Fail:
            return "fail";
        default:
            return "not_applicable";
    }
}

Verdict verdict_from(const std::string& s) {
    if (s == "pass") return Verdict::Pass;
    if (s == "fail") return Verdict::Fail;
    return Verdict::NotApplicable;
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

}  // namespace

nlohmann::json VerdictSummary::to_json() const {
    return {{"ratio_trend", verdict_name(ratio_trend)},
            {"integral_u_decreasing", verdict_name(integral_u_decreasing)},
            {"psi_f_excess", verdict_name(psi_f_excess)},
            {"center_increasing", verdict_name(center_increasing)},
            {"capacity_band", verdict_name(capacity_band)},
            {"lp_decreasing", verdict_name(lp_decreasing)},
            {"sandwich", verdict_name(sandwich)}};
}

std::string table_to_csv(const SweepTable& table) {
    std::string out;
    for (std::size_t c = 0; c < kSweepColumns.size(); ++c) {
        out += kSweepColumns[c];
        out += (c + 1 < kSweepColumns.size()) ? ',' : '\n';
    }
    for (const auto& r : table.rows) {
        if (r.failed) continue;
        const double cols[15] = {r.alpha,          r.lambda_star, r.lambda_ub,
                                 r.lambda_lb,      r.ratio,       r.u_center,
                                 r.integral_u,     r.integral_psi_f, r.f0_integral_psi,
                                 r.kappa1_at_fold, r.capacity,    r.center_over_capacity,
                                 r.lp1,            r.lp2,         r.lp4};
        for (int c = 0; c < 15; ++c) {
            out += fmt(cols[c]);
            out += (c + 1 < 15) ? ',' : '\n';
        }
    }
    return out;
}

nlohmann::json table_to_json(const SweepTable& table) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : table.rows) {
        nlohmann::json jr;
        jr["alpha"] = r.alpha;
        jr["lambda_star"] = r.lambda_star;
        jr["lambda_ub"] = r.lambda_ub;
        jr["lambda_lb"] = r.lambda_lb;
        jr["ratio"] = r.ratio;
        jr["u_center"] = r.u_center;
        jr["integral_u"] = r.integral_u;
        jr["integral_psi_f"] = r.integral_psi_f;
        jr["f0_integral_psi"] = r.f0_integral_psi;
        jr["kappa1_at_fold"] = r.kappa1_at_fold;
        jr["capacity"] = std::isfinite(r.capacity) ? nlohmann::json(r.capacity) : nlohmann::json();
        jr["center_over_capacity"] = std::isfinite(r.center_over_capacity)
                                         ? nlohmann::json(r.center_over_capacity)
                                         : nlohmann::json();
        jr["lp1"] = r.lp1;
        jr["lp2"] = r.lp2;
        jr["lp4"] = r.lp4;
        jr["wall_ms"] = r.wall_ms;
        jr["u_at_half"] = r.u_at_half;
        jr["companion_lambda_star"] = r.companion_lambda_star;
        jr["companion_disagrees"] = r.companion_disagrees;
        jr["failed"] = r.failed;
        if (r.failed) jr["error"] = r.error;
        rows.push_back(jr);
    }
    return {{"config", table.config.to_json()},
            {"hypothesis_pass", table.hypothesis_pass},
            {"rows", rows},
            {"verdicts", table.verdicts.to_json()}};
}

SweepTable table_from_json(const nlohmann::json& j) {
    SweepTable table;
    table.config = SweepConfig::from_json(j.at("config"));
    table.hypothesis_pass = j.at("hypothesis_pass").get<bool>();
    for (const auto& jr : j.at("rows")) {
        SweepRow r;
        r.alpha = jr.at("alpha").get<double>();
        r.lambda_star = jr.at("lambda_star").get<double>();
        r.lambda_ub = jr.at("lambda_ub").get<double>();
        r.lambda_lb = jr.at("lambda_lb").get<double>();
        r.ratio = jr.at("ratio").get<double>();
        r.u_center = jr.at("u_center").get<double>();
        r.integral_u = jr.at("integral_u").get<double>();
        r.integral_psi_f = jr.at("integral_psi_f").get<double>();
        r.f0_integral_psi = jr.at("f0_integral_psi").get<double>();
        r.kappa1_at_fold = jr.at("kappa1_at_fold").get<double>();
        r.capacity = jr.at("capacity").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                                 : jr.at("capacity").get<double>();
        r.center_over_capacity = jr.at("center_over_capacity").is_null()
                                     ? std::numeric_limits<double>::quiet_NaN()
                                     : jr.at("center_over_capacity").get<double>();
        r.lp1 = jr.at("lp1").get<double>();
        r.lp2 = jr.at("lp2").get<double>();
        r.lp4 = jr.at("lp4").get<double>();
        r.wall_ms = jr.at("wall_ms").get<double>();
        r.u_at_half = jr.at("u_at_half").get<double>();
        r.companion_lambda_star = jr.at("companion_lambda_star").get<double>();
        r.companion_disagrees = jr.at("companion_disagrees").get<bool>();
        r.failed = jr.at("failed").get<bool>();
        if (r.failed) r.error = jr.at("error").get<std::string>();
        table.rows.push_back(r);
    }
    const auto& v = j.at("verdicts");
    table.verdicts.ratio_trend = verdict_from(v.at("ratio_trend").get<std::string>());
    table.verdicts.integral_u_decreasing =
        verdict_from(v.at("integral_u_decreasing").get<std::string>());
    table.verdicts.psi_f_excess = verdict_from(v.at("psi_f_excess").get<std::string>());
    table.verdicts.center_increasing = verdict_from(v.at("center_increasing").get<std::string>());
    table.verdicts.capacity_band = verdict_from(v.at("capacity_band").get<std::string>());
    table.verdicts.lp_decreasing = verdict_from(v.at("lp_decreasing").get<std::string>());
    table.verdicts.sandwich = verdict_from(v.at("sandwich").get<std::string>());
    return table;
}

nlohmann::json run_manifest(const SweepTable& table, const std::string& format) {
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(table.config.hash()));
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : table.rows)
        rows.push_back({{"alpha", r.alpha}, {"wall_ms", r.wall_ms}, {"failed", r.failed}});
    return {{"config_hash", hash},
            {"version", kVersion},
            {"format", format},
            {"row_timing", rows}};
}

void emit(const SweepTable& table, const std::string& out_dir, const std::string& format) {
    if (table.rows.empty()) throw ConfigError("emit requires a non-empty table");
    if (format != "csv" && format != "json")
        throw ConfigError("emit format must be 'csv' or 'json'");
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);

    auto write = [&](const std::string& name, const std::string& body) {
        const fs::path path = fs::path(out_dir) / name;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw ConfigError("cannot write " + path.string());
        out << body;
    };
    if (format == "csv")
        write("sweep.csv", table_to_csv(table));
    else
        write("sweep.json", table_to_json(table).dump(2) + "\n");
    write("manifest.json", run_manifest(table, format).dump(2) + "\n");
}

nlohmann::json default_model_json() {
    return {{"nonlinearity", {{"kind", "exp"}}},
            {"phi", {{"kind", "gaussian"}, {"a", 4.0}}},
            {"psi", {{"kind", "power_of_phi"}}},
            {"sc", 0.75}};
}

Model default_model() { return Model::from_json(default_model_json()); }

// ---------------------------------------------------------------------------
// Self check
// ---------------------------------------------------------------------------

int selfcheck(std::ostream& out, unsigned seed) {
    int failures = 0;
    auto check = [&](const char* name, bool ok) {
        out << (ok ? "ok   " : "FAIL ") << name << "\n";
        if (!ok) ++failures;
    };

    try {
        QuadratureOptions qo;
        qo.rel_tol = 1e-12;
        const double one =
            integrate_to_infinity([](double s) { return std::exp(-s); }, 0.0, qo).value;
        check("quadrature: improper exponential mass", std::abs(one - 1.0) <= 1e-10);

        // Thomas vs dense LU on seeded diagonally dominant systems.
        std::mt19937 rng(seed);
        std::uniform_real_distribution<double> uni(-1.0, 1.0);
        bool thomas_ok = true;
        for (int trial = 0; trial < 25; ++trial) {
            const int n = 3 + static_cast<int>(rng() % 30);
            TridiagonalSystem sys;
            sys.sub.resize(n - 1);
            sys.super.resize(n - 1);
            sys.diag.resize(n);
            sys.rhs.resize(n);
            Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(n, n);
            for (int i = 0; i < n; ++i) {
                sys.diag[i] = 3.0 + uni(rng);
                sys.rhs[i] = uni(rng);
                dense(i, i) = sys.diag[i];
            }
            for (int i = 0; i + 1 < n; ++i) {
                sys.sub[i] = uni(rng);
                sys.super[i] = uni(rng);
                dense(i + 1, i) = sys.sub[i];
                dense(i, i + 1) = sys.super[i];
            }
            const Vector x = solve_tridiagonal(sys);
            const Vector ref = dense.fullPivLu().solve(sys.rhs);
            if ((x - ref).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + ref.cwiseAbs().maxCoeff()))
                thomas_ok = false;
        }
        check("tridiagonal: matches dense elimination", thomas_ok);

        const Nonlinearity nl_exp = Nonlinearity::exponential();
        const Nonlinearity nl_p3 = Nonlinearity::power(3.0);
        check("transform: k(exp) = 1", std::abs(compute_k(nl_exp) - 1.0) <= 1e-10);
        check("transform: k(power 3) = 1/2", std::abs(compute_k(nl_p3) - 0.5) <= 1e-10);

        std::uniform_real_distribution<double> gdist(1e-9, 1.0);
        bool round_ok = true, mono_ok = true;
        double prev_v = -1.0, prev_g = 2.0;
        for (int t = 0; t < 64; ++t) {
            const double gval = gdist(rng) * nl_exp.k();
            const double v = nl_exp.g_inverse(gval);
            if (std::abs(nl_exp.g(v) - gval) > 1e-10 * nl_exp.k()) round_ok = false;
            const double vv = 20.0 * gdist(rng);
            const double gv = nl_exp.g_fast(vv);
            if (prev_v >= 0.0 && ((vv > prev_v && gv >= prev_g) || (vv < prev_v && gv <= prev_g)))
                mono_ok = false;
            prev_v = vv;
            prev_g = gv;
        }
        check("transform: g round trip within 1e-10 k", round_ok);
        check("transform: g strictly decreasing on probes", mono_ok);

        const FlowProfile jet(PhiSpec{PhiKind::Gaussian, 4.0, {}}, PsiSpec{PsiKind::PowerOfPhi, {}}, 0.75);
        bool m_one = true;
        for (int j = 0; j <= 32; ++j)
            if (std::abs(jet.ratio_max(j / 32.0) - 1.0) > 1e-9) m_one = false;
        check("flow: ratio max is 1 for the gaussian jet", m_one);
        check("flow: log weight closed form",
              std::abs(log_advection_weight(jet, 8.0, 1.0) - (1.0 - std::exp(-4.0))) <= 1e-10);

        auto model = std::make_shared<Model>(default_model());
        auto unit = std::make_shared<Model>(
            Nonlinearity::exponential(),
            FlowProfile(PhiSpec{PhiKind::Constant, 4.0, {}}, PsiSpec{PsiKind::Constant, {}}, 0.75));
        auto g0 = build_grid(unit, 0.0, GridResolution::fine());
        const double j01sq = 5.783185962946785;
        const double ev = dirichlet_eigen_estimate(*g0, 0);
        check("stencil: disk eigenvalue within 0.5%", std::abs(ev - j01sq) <= 5e-3 * j01sq);

        check("roots: theta level with a double root",
              std::abs(theta_star(*unit, std::exp(std::exp(1.0)), 1.0) - 1.0) <= 1e-6);
        check("roots: capacity log log alpha",
              std::abs(capacity_a(*unit, 1e4, 1.0) - std::log(std::log(1e4))) <= 1e-10);
        check("hypothesis: exponential admits (c0, c1) = (1/3, 4)",
              growth_hypothesis_single(nl_exp, 1.0 / 3.0, 4.0, 1.0));
        (void)model;
    } catch (const std::exception& e) {
        out << "FAIL selfcheck aborted: " << e.what() << "\n";
        ++failures;
    }
    return failures;
}

}  // namespace jetcrit
