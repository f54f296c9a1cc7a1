#include "jetcrit/errors.hpp"
#include "jetcrit/harness.hpp"
#include "jetcrit/stability.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

namespace {

using namespace jetcrit;

std::shared_ptr<const Model> load_model(const std::string& path) {
    if (path.empty()) return std::make_shared<Model>(default_model());
    return std::make_shared<Model>(Model::from_json_file(path));
}

GridResolution parse_resolution(const std::string& name) {
    return name.empty() ? GridResolution::standard() : GridResolution::parse(name);
}

void write_text(const std::string& path, const std::string& body) {
    if (path.empty() || path == "-") {
        std::cout << body;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << body;
}

std::string profile_csv(const SolutionProfile& p) {
    std::ostringstream out;
    out << "y,r,v,g_of_v\n";
    const auto& nl = p.grid->model->nonlinearity();
    char buf[160];
    for (int i = 0; i < p.grid->node_count(); ++i) {
        const double y = p.grid->y[i];
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", y, y / p.grid->domain_end,
                      p.v[i], nl.g_fast(std::max(p.v[i], 0.0)));
        out << buf;
    }
    return out.str();
}

nlohmann::json critical_json(const LambdaStarResult& res) {
    const ExtremalDiagnostics d = extremal_diagnostics(res);
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : res.log)
        steps.push_back({{"lambda", s.lambda},
                         {"status", static_cast<int>(s.status)},
                         {"iterations", s.iterations},
                         {"center", s.center},
                         {"residual", s.residual},
                         {"cold_start", s.cold_start}});
    nlohmann::json j{{"alpha", res.alpha},
                     {"lambda_lo", res.lambda_lo},
                     {"lambda_hi", res.lambda_hi},
                     {"lambda_star", res.lambda_star_estimate},
                     {"kappa1_at_fold", res.kappa1_at_fold},
                     {"bisection_steps", res.bisection_steps},
                     {"hi_verified", res.hi_verified},
                     {"inconclusive_count", res.inconclusive_count},
                     {"experimental_flow", res.experimental_flow},
                     {"log", steps},
                     {"diagnostics",
                      {{"u_center", d.center},
                       {"u_at_half", d.u_at_half},
                       {"integral_u", d.integral_u},
                       {"integral_psi_f", d.integral_psi_f},
                       {"f0_integral_psi", d.f0_integral_psi},
                       {"lp1", d.lp_norm_1},
                       {"lp2", d.lp_norm_2},
                       {"lp4", d.lp_norm_4}}}};
    if (res.companion_ran)
        j["companion"] = {{"lambda_star", res.companion_lambda_star},
                          {"disagrees", res.companion_disagrees}};
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"jetcrit: criticality of the advective Gelfand model for jet auto-ignition"};
    app.require_subcommand(1);

    std::string model_path, out_path, resolution, format = "csv", alphas_csv;
    double alpha = 0.0, lambda = 0.0, wparam = 0.0, bracket_tol = 1e-3;
    int jobs = 1;
    unsigned seed = 12345;
    std::string dump_grid_path;

    auto* solve_cmd = app.add_subcommand("solve", "minimal solution at (alpha, lambda)");
    solve_cmd->add_option("--alpha", alpha, "flow rate parameter")->required();
    solve_cmd->add_option("--lambda", lambda, "reaction strength")->required();
    solve_cmd->add_option("--model", model_path, "model description JSON");
    solve_cmd->add_option("--out", out_path, "profile CSV path (default stdout)");
    solve_cmd->add_option("--resolution", resolution, "coarse|default|fine|<cells>");
    solve_cmd->add_option("--dump-grid", dump_grid_path, "also dump the mesh as CSV");

    auto* critical_cmd = app.add_subcommand("critical", "bracket the fold lambda*(alpha)");
    critical_cmd->add_option("--alpha", alpha)->required();
    critical_cmd->add_option("--model", model_path);
    critical_cmd->add_option("--out", out_path, "result JSON path (default stdout)");
    critical_cmd->add_option("--resolution", resolution);
    critical_cmd->add_option("--bracket-tol", bracket_tol);

    auto* stability_cmd = app.add_subcommand("stability", "principal eigenvalue at (alpha, lambda)");
    stability_cmd->add_option("--alpha", alpha)->required();
    stability_cmd->add_option("--lambda", lambda)->required();
    stability_cmd->add_option("--model", model_path);
    stability_cmd->add_option("--out", out_path);
    stability_cmd->add_option("--resolution", resolution);

    auto* bounds_cmd = app.add_subcommand("bounds", "certified bounds and hypothesis checks");
    bounds_cmd->add_option("--alpha", alpha)->required();
    bounds_cmd->add_option("--model", model_path);
    bounds_cmd->add_option("--out", out_path);
    bounds_cmd->add_option("--resolution", resolution);

    auto* certify_cmd = app.add_subcommand("certify", "sub-solution certificate at (alpha, lambda, w)");
    certify_cmd->add_option("--alpha", alpha)->required();
    certify_cmd->add_option("--lambda", lambda)->required();
    certify_cmd->add_option("--w", wparam, "positivity-floor parameter")->required();
    certify_cmd->add_option("--model", model_path);
    certify_cmd->add_option("--out", out_path, "witness CSV path");
    certify_cmd->add_option("--resolution", resolution);

    auto* sweep_cmd = app.add_subcommand("sweep", "alpha sweep with verdict summary");
    sweep_cmd->add_option("--model", model_path);
    sweep_cmd->add_option("--alphas", alphas_csv, "comma-separated alpha list");
    sweep_cmd->add_option("--alpha", alpha, "single alpha (alternative to --alphas)");
    sweep_cmd->add_option("--out", out_path, "output directory (default .)");
    sweep_cmd->add_option("--format", format, "csv|json");
    std::vector<std::string> sweep_res;
    sweep_cmd->add_option("--resolution", sweep_res, "one or two of coarse|default|fine|<cells>")
        ->expected(0, 2);
    sweep_cmd->add_option("--jobs", jobs, "parallel workers across alpha");
    sweep_cmd->add_option("--bracket-tol", bracket_tol);
    sweep_cmd->add_option("--seed", seed, "probe-grid property seed");

    auto* selfcheck_cmd = app.add_subcommand("selfcheck", "run the invariant suites");
    selfcheck_cmd->add_option("--seed", seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (solve_cmd->parsed()) {
            auto model = load_model(model_path);
            auto grid = build_grid(model, alpha, parse_resolution(resolution));
            if (!dump_grid_path.empty()) {
                std::ofstream g(dump_grid_path, std::ios::binary);
                if (!g) throw ConfigError("cannot write " + dump_grid_path);
                dump_grid_csv(*grid, g);
            }
            const SolveOutcome out = minimal_solution(*model, alpha, lambda, grid);
            if (out.status == SolveStatus::NoSolutionDetected) {
                std::cerr << "no solution detected at lambda = " << lambda
                          << " (blow-up past the cap)\n";
                return 1;
            }
            if (!out.converged()) {
                std::cerr << "inconclusive after " << out.diagnostics.outer_iterations
                          << " iterations (residual " << out.diagnostics.final_residual << ")\n";
                return 1;
            }
            write_text(out_path, profile_csv(*out.profile));
        } else if (critical_cmd->parsed()) {
            auto model = load_model(model_path);
            CriticalOptions opts;
            opts.resolution = parse_resolution(resolution);
            opts.bracket_tol = bracket_tol;
            const LambdaStarResult res = find_lambda_star(model, alpha, opts);
            write_text(out_path, critical_json(res).dump(2) + "\n");
        } else if (stability_cmd->parsed()) {
            auto model = load_model(model_path);
            auto grid = build_grid(model, alpha, parse_resolution(resolution));
            const SolveOutcome out = minimal_solution(*model, alpha, lambda, grid);
            if (!out.converged()) {
                std::cerr << "no converged minimal solution at this lambda\n";
                return 1;
            }
            const EigResult eig = principal_eigenvalue(*out.profile);
            const char* verdict = eig.verdict == StabilityVerdict::SemiStable ? "semi_stable"
                                  : eig.verdict == StabilityVerdict::Marginal ? "marginal"
                                                                              : "unstable";
            nlohmann::json j{
                {"kappa1", eig.kappa1}, {"verdict", verdict}, {"iterations", eig.iterations}};
            write_text(out_path, j.dump(2) + "\n");
        } else if (bounds_cmd->parsed()) {
            auto model = load_model(model_path);
            const BoundsReport rep = bounds_report(model, alpha, parse_resolution(resolution));
            write_text(out_path, rep.to_json().dump(2) + "\n");
        } else if (certify_cmd->parsed()) {
            auto model = load_model(model_path);
            auto grid = build_grid(model, alpha, parse_resolution(resolution));
            const CertificateContext ctx = make_certificate_context(grid);
            const CertificateResult cert =
                subsolution_certificate(*model, alpha, lambda, wparam, ctx);
            std::cout << (cert.pass ? "PASS" : "FAIL") << " margin=" << cert.margin
                      << " beta=" << cert.beta << " epsilon_w=" << cert.epsilon_w << "\n";
            if (cert.pass && !out_path.empty()) {
                std::ostringstream csv;
                csv << "y,gtilde,gtilde_prime\n";
                char buf[120];
                for (int i = 0; i < grid->node_count(); ++i) {
                    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", grid->y[i],
                                  cert.witness[i], -cert.beta * ctx.zprime[i] + 0.0);
                    csv << buf;
                }
                write_text(out_path, csv.str());
            }
            if (!cert.pass) return 1;
        } else if (sweep_cmd->parsed()) {
            SweepConfig cfg;
            cfg.model_json = model_path.empty()
                                 ? default_model_json()
                                 : Model::from_json_file(model_path).to_json();
            if (!alphas_csv.empty()) {
                std::stringstream ss(alphas_csv);
                std::string tok;
                while (std::getline(ss, tok, ','))
                    if (!tok.empty()) cfg.alphas.push_back(std::stod(tok));
            } else if (alpha > 0.0) {
                cfg.alphas.push_back(alpha);
            } else {
                cfg.alphas = {1e2, 1e3, 1e4, 1e5, 1e6};
            }
            if (sweep_res.empty())
                cfg.resolutions = {GridResolution::standard()};
            else
                for (const auto& r : sweep_res) cfg.resolutions.push_back(GridResolution::parse(r));
            cfg.bracket_tol = bracket_tol;
            cfg.jobs = jobs;
            cfg.seed = seed;
            cfg.out_dir = out_path.empty() ? "." : out_path;

            const SweepTable table = run_sweep(cfg);
            emit(table, cfg.out_dir, format);
            std::cout << table.verdicts.to_json().dump(2) << "\n";
            int failed_rows = 0;
            for (const auto& r : table.rows)
                if (r.failed) {
                    ++failed_rows;
                    std::cerr << "row alpha=" << r.alpha << " failed: " << r.error << "\n";
                }
            if (failed_rows > 0 || table.verdicts.any_fail()) return 1;
        } else if (selfcheck_cmd->parsed()) {
            if (selfcheck(std::cout, seed) > 0) return 1;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
