#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "jetcrit/errors.hpp"
#include "jetcrit/harness.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace jetcrit;

namespace {

SweepConfig unit_config(std::vector<double> alphas) {
    SweepConfig cfg;
    cfg.model_json = {{"nonlinearity", {{"kind", "exp"}}},
                      {"phi", {{"kind", "const"}}},
                      {"psi", {{"kind", "const"}}},
                      {"sc", 0.75}};
    cfg.alphas = std::move(alphas);
    cfg.resolutions = {GridResolution::standard()};
    cfg.bracket_tol = 5e-3;
    return cfg;
}

}  // namespace

TEST_CASE("config validation") {
    SweepConfig cfg = unit_config({1e3});
    CHECK_NOTHROW(cfg.validate());
    cfg.alphas = {};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = unit_config({1e3, 1e2});
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = unit_config({50.0});
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = unit_config({1e3});
    cfg.jobs = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = unit_config({1e3});
    cfg.resolutions = {};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("single-alpha sweep reports trend verdicts as not applicable") {
    const SweepTable table = run_sweep(unit_config({1e3}));
    REQUIRE(table.rows.size() == 1);
    CHECK(!table.rows[0].failed);
    CHECK(table.verdicts.ratio_trend == Verdict::NotApplicable);
    CHECK(table.verdicts.integral_u_decreasing == Verdict::NotApplicable);
    CHECK(table.verdicts.sandwich == Verdict::Pass);
    CHECK(table.rows[0].ratio > 0.0);
    CHECK(table.rows[0].ratio < 2.0);
    CHECK(table.rows[0].lambda_lb <= table.rows[0].lambda_star);
    CHECK(table.rows[0].lambda_star <= table.rows[0].lambda_ub);

    // CSV schema: header column count equals the published schema.
    const std::string csv = table_to_csv(table);
    std::istringstream lines(csv);
    std::string header;
    std::getline(lines, header);
    CHECK(std::count(header.begin(), header.end(), ',') + 1 ==
          static_cast<long>(kSweepColumns.size()));
    std::string row;
    std::getline(lines, row);
    CHECK(std::count(row.begin(), row.end(), ',') + 1 ==
          static_cast<long>(kSweepColumns.size()));
    std::string rest;
    CHECK(!std::getline(lines, rest));  // exactly one data line
}

TEST_CASE("json round trip reproduces the table and its verdicts") {
    const SweepTable table = run_sweep(unit_config({1e3}));
    const nlohmann::json j = table_to_json(table);
    const SweepTable back = table_from_json(j);
    CHECK(table_to_json(back) == j);
    CHECK(table_to_csv(back) == table_to_csv(table));

    // Verdicts are a pure function of the persisted rows.
    const VerdictSummary again = evaluate_verdicts(back.rows, back.hypothesis_pass);
    CHECK(again.to_json() == table.verdicts.to_json());
}

TEST_CASE("csv emission is deterministic for a fixed table") {
    const SweepTable table = run_sweep(unit_config({1e3}));
    CHECK(table_to_csv(table) == table_to_csv(table));

    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "jetcrit_emit_test";
    fs::remove_all(dir);
    emit(table, dir.string(), "csv");
    CHECK(fs::exists(dir / "sweep.csv"));
    CHECK(fs::exists(dir / "manifest.json"));
    std::ifstream m(dir / "manifest.json");
    nlohmann::json manifest;
    m >> manifest;
    CHECK(manifest.at("version").get<std::string>() == kVersion);
    CHECK(manifest.at("row_timing").size() == table.rows.size());

    emit(table, dir.string(), "json");
    std::ifstream js(dir / "sweep.json");
    nlohmann::json sweep;
    js >> sweep;
    CHECK(table_to_json(table_from_json(sweep)) == table_to_json(table));
    fs::remove_all(dir);
}

TEST_CASE("emit rejects empty tables and unknown formats") {
    SweepTable empty;
    CHECK_THROWS_AS(emit(empty, ".", "csv"), ConfigError);
    const SweepTable table = run_sweep(unit_config({1e3}));
    CHECK_THROWS_AS(emit(table, ".", "parquet"), ConfigError);
}

TEST_CASE("verdict trends on synthetic rows") {
    auto mk = [](double alpha, double ratio, double iu, double excess, double uc, double lp) {
        SweepRow r;
        r.alpha = alpha;
        r.ratio = ratio;
        r.integral_u = iu;
        r.integral_psi_f = 1.0 + excess;
        r.f0_integral_psi = 1.0;
        r.u_center = uc;
        r.capacity = 1.0;
        r.center_over_capacity = uc;
        r.lp1 = r.lp2 = r.lp4 = lp;
        r.lambda_lb = 0.5;
        r.lambda_star = 0.7;
        r.lambda_ub = 1.0;
        return r;
    };
    std::vector<SweepRow> good = {mk(1e2, 0.80, 3.0, 0.9, 2.0, 1.0),
                                  mk(1e3, 0.85, 2.0, 0.5, 2.5, 0.8),
                                  mk(1e4, 0.90, 1.5, 0.3, 3.0, 0.6)};
    const VerdictSummary v = evaluate_verdicts(good, true);
    CHECK(v.ratio_trend == Verdict::Pass);
    CHECK(v.integral_u_decreasing == Verdict::Pass);
    CHECK(v.psi_f_excess == Verdict::Pass);
    CHECK(v.center_increasing == Verdict::Pass);
    CHECK(v.capacity_band == Verdict::Pass);
    CHECK(v.lp_decreasing == Verdict::Pass);
    CHECK(v.sandwich == Verdict::Pass);
    CHECK(!v.any_fail());

    auto bad = good;
    bad[2].ratio = 0.5;  // deviation grows again
    CHECK(evaluate_verdicts(bad, true).ratio_trend == Verdict::Fail);
    bad = good;
    bad[1].lambda_star = 2.0;  // escapes the sandwich
    CHECK(evaluate_verdicts(bad, true).sandwich == Verdict::Fail);
    bad = good;
    bad[2].u_center = 1.0;  // centre collapses
    CHECK(evaluate_verdicts(bad, true).center_increasing == Verdict::Fail);
    CHECK(evaluate_verdicts(good, false).capacity_band == Verdict::NotApplicable);
}

TEST_CASE("default model parses and the hash is stable") {
    const Model m = default_model();
    CHECK(m.nonlinearity().kind() == NonlinearityKind::Exponential);
    CHECK(m.flow().sc() == 0.75);
    SweepConfig a = unit_config({1e3});
    SweepConfig b = unit_config({1e3});
    CHECK(a.hash() == b.hash());
    b.bracket_tol *= 2.0;
    CHECK(a.hash() != b.hash());
}

TEST_CASE("selfcheck passes") {
    std::ostringstream out;
    CHECK(selfcheck(out, 12345) == 0);
    CHECK(out.str().find("FAIL") == std::string::npos);
}
