// Command-line front end: simulate datasets, run the fiducial chain, compare
// against closed-form baselines, and replicate whole experiments.
//
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 chain
// divergence.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "efi/config.hpp"
#include "efi/inference.hpp"

namespace {

using json = nlohmann::json;

struct CliState {
    std::string config_path;
    std::string out_dir = ".";
    std::string data_path;
    std::string out_path;
    std::string method;
    std::string preset_name;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 1;
};

std::string out_file(const CliState& cli, const std::string& name) {
    return (std::filesystem::path(cli.out_dir) / name).string();
}

void ensure_out_dir(const CliState& cli) {
    std::error_code ec;
    std::filesystem::create_directories(cli.out_dir, ec);
    if (ec)
        throw std::runtime_error("cannot create output directory " +
                                 cli.out_dir + ": " + ec.message());
}

efi::ExperimentConfig load_cli_config(const CliState& cli) {
    if (cli.config_path.empty())
        throw efi::ConfigError("--config is required for this command");
    efi::ExperimentConfig cfg = efi::load_config_file(cli.config_path);
    if (cli.seed_set) cfg.seed = cli.seed;
    if (!cli.method.empty()) {
        efi::apply_config_key(cfg, "methods", cli.method);
        efi::validate_config(cfg);
    }
    return cfg;
}

// --- simulate ----------------------------------------------------------------

int cmd_simulate(const CliState& cli) {
    const efi::ExperimentConfig cfg = load_cli_config(cli);
    const efi::Dataset data = efi::simulate_dataset(cfg, cfg.seed);
    std::string path = cli.out_path;
    if (path.empty()) {
        ensure_out_dir(cli);
        path = out_file(cli, "data.csv");
    }
    efi::write_dataset_csv(data, path);
    std::cout << "wrote " << data.n() << " rows (family " << cfg.family.name
              << ", seed " << cfg.seed << ") to " << path << "\n";
    return 0;
}

// --- fit ---------------------------------------------------------------------

void write_trace_csv(const std::string& path,
                     const std::vector<efi::TraceRow>& trace) {
    efi::Matrix m(static_cast<Eigen::Index>(trace.size()), 4);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const efi::TraceRow& row = trace[static_cast<std::size_t>(i)];
        m(i, 0) = static_cast<double>(row.iteration);
        m(i, 1) = row.energy;
        m(i, 2) = row.penalty;
        m(i, 3) = row.discrepancy;
    }
    efi::write_matrix_csv(path, {"iteration", "energy", "penalty", "discrepancy"},
                          m);
}

void write_ci_csv(const std::string& path, const efi::DiagnosticsBundle& diag) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "param,estimate,lo,hi\n";
    char buf[128];
    for (Eigen::Index i = 0; i < diag.ci.rows(); ++i) {
        std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g\n",
                      diag.ci_names[static_cast<std::size_t>(i)].c_str(),
                      diag.ci(i, 0), diag.ci(i, 1), diag.ci(i, 2));
        out << buf;
    }
    if (!out) throw std::runtime_error("short write to " + path);
}

int cmd_fit(const CliState& cli) {
    const efi::ExperimentConfig cfg = load_cli_config(cli);
    if (cli.data_path.empty())
        throw efi::ConfigError("fit needs a data file (--data)");
    const efi::Dataset data = efi::read_dataset_csv(cli.data_path);
    const auto family = efi::build_family(cfg);
    efi::check_data_schema(cfg, *family, data);
    ensure_out_dir(cli);

    const auto t0 = std::chrono::steady_clock::now();
    const efi::FiducialSamples fit = efi::fit_dataset(cfg, data, cfg.seed);
    const double runtime =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();

    efi::write_matrix_csv(out_file(cli, "samples.csv"), fit.names, fit.draws);
    write_trace_csv(out_file(cli, "trace.csv"), fit.trace);

    json summary;
    summary["family"] = cfg.family.name;
    summary["n"] = data.n();
    summary["seed"] = cfg.seed;
    summary["level"] = cfg.level;
    summary["iterations"] = fit.iterations;
    summary["draws"] = fit.draws.rows();
    summary["final_energy"] = fit.final_energy;
    summary["runtime_seconds"] = runtime;
    summary["params"] = json::array();
    summary["estimate"] = json::array();
    summary["ci_lo"] = json::array();
    summary["ci_hi"] = json::array();

    if (fit.draws.rows() >= 2) {
        const efi::DiagnosticsBundle diag =
            efi::diagnostics(fit, *family, data, cfg.level);
        for (Eigen::Index i = 0; i < diag.ci.rows(); ++i) {
            summary["params"].push_back(
                diag.ci_names[static_cast<std::size_t>(i)]);
            summary["estimate"].push_back(diag.ci(i, 0));
            summary["ci_lo"].push_back(diag.ci(i, 1));
            summary["ci_hi"].push_back(diag.ci(i, 2));
        }
        if (diag.z_scatter.rows() > 0)
            efi::write_matrix_csv(out_file(cli, "plotdata_z_scatter.csv"),
                                  diag.z_scatter_cols, diag.z_scatter);
        efi::write_matrix_csv(out_file(cli, "plotdata_qq.csv"), diag.qq_cols,
                              diag.qq);
        if (diag.residual.rows() > 0)
            efi::write_matrix_csv(out_file(cli, "plotdata_residual.csv"),
                                  diag.residual_cols, diag.residual);
        write_ci_csv(out_file(cli, "plotdata_ci.csv"), diag);
    }

    std::ofstream out(out_file(cli, "summary.json"));
    if (!out) throw std::runtime_error("cannot write summary.json");
    out << summary.dump(2) << "\n";

    std::cout << "collected " << fit.draws.rows() << " draws in " << runtime
              << " s; outputs in " << cli.out_dir << "\n";
    return 0;
}

// --- replicate -----------------------------------------------------------------

int cmd_replicate(const CliState& cli) {
    const efi::ExperimentConfig cfg = load_cli_config(cli);
    ensure_out_dir(cli);
    const std::vector<efi::MethodReport> reports =
        efi::run_replicates(cfg, cli.threads);

    const std::string path = out_file(cli, "coverage.csv");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "group,method,coverage,width_mean,width_std\n";
    char buf[192];
    for (const efi::MethodReport& mr : reports) {
        for (const efi::CoverageRow& row : mr.report.rows) {
            std::snprintf(buf, sizeof(buf), "%s,%s,%.17g,%.17g,%.17g\n",
                          row.group.c_str(), mr.method.c_str(), row.coverage,
                          row.width_mean, row.width_std);
            out << buf;
        }
    }
    if (!out) throw std::runtime_error("short write to " + path);

    for (const efi::MethodReport& mr : reports) {
        std::cout << mr.method << ": " << mr.report.replicates << " replicates";
        if (mr.report.failures > 0)
            std::cout << " (" << mr.report.failures << " failed)";
        std::cout << "\n";
        for (const efi::CoverageRow& row : mr.report.rows)
            std::cout << "  " << row.group << ": coverage " << row.coverage
                      << ", width " << row.width_mean << "\n";
        for (const std::string& err : mr.report.errors)
            std::cerr << "  " << mr.method << " " << err << "\n";
    }
    std::cout << "wrote " << path << "\n";
    return 0;
}

// --- baseline ------------------------------------------------------------------

int cmd_baseline(const CliState& cli) {
    const efi::ExperimentConfig cfg = load_cli_config(cli);
    if (cli.data_path.empty())
        throw efi::ConfigError("baseline needs a data file (--data)");
    if (cfg.truth.empty())
        throw efi::ConfigError("baseline needs 'truth' in the config");
    const efi::Dataset data = efi::read_dataset_csv(cli.data_path);
    const auto family = efi::build_family(cfg);
    efi::check_data_schema(cfg, *family, data);
    ensure_out_dir(cli);

    std::vector<std::string> methods;
    for (const std::string& m : cfg.methods)
        if (m != "efi") methods.push_back(m);
    if (methods.empty())
        throw efi::ConfigError("no baseline methods configured (methods other "
                               "than efi)");

    const std::string path = out_file(cli, "baseline.csv");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "method,group,truth,lo,hi,width,covered\n";
    char buf[256];
    for (const std::string& method : methods) {
        const std::vector<efi::QuantityCheck> checks =
            efi::evaluate_method(cfg, method, data, cfg.seed);
        for (const efi::QuantityCheck& c : checks) {
            std::snprintf(buf, sizeof(buf), "%s,%s,%.17g,%.17g,%.17g,%.17g,%d\n",
                          method.c_str(), c.group.c_str(), c.truth, c.lo, c.hi,
                          c.width(), c.covered() ? 1 : 0);
            out << buf;
        }
    }
    if (!out) throw std::runtime_error("short write to " + path);
    std::cout << "wrote " << path << "\n";
    return 0;
}

// --- presets ---------------------------------------------------------------------

std::string describe_preset(const std::string& name) {
    if (name == "linear_known_sigma")
        return "linear regression, ten coefficients, known noise scale";
    if (name == "linear_known_sigma_a")
        return "linear regression with the per-sample energy variant";
    if (name.rfind("linear_unknown_", 0) == 0)
        return "linear regression with unknown noise scale";
    if (name.rfind("bf_", 0) == 0)
        return "two-group mean difference with unequal group variances";
    if (name == "bivariate_normal")
        return "bivariate normal mean/variance/correlation inference";
    if (name == "outlier_tempered")
        return "contaminated regression with temperature annealing";
    if (name == "gauss2")
        return "exponential-plus-two-bumps curve fit, two-phase step sizes";
    if (name == "logistic") return "binary logistic regression";
    if (name.rfind("ssl_", 0) == 0)
        return "semi-supervised binary classification";
    if (name.rfind("mediation_power_", 0) == 0)
        return "mediation product test, nonzero effect (power)";
    if (name.rfind("mediation_", 0) == 0)
        return "mediation product test, null effect (type-I error)";
    return "";
}

int cmd_presets(const CliState& cli) {
    if (cli.preset_name.empty()) {
        for (const std::string& name : efi::preset_names())
            std::cout << name << "  # " << describe_preset(name) << "\n";
        return 0;
    }
    const efi::ExperimentConfig cfg = efi::preset_config(cli.preset_name);
    std::cout << "# " << cli.preset_name << ": " << describe_preset(cli.preset_name)
              << "\n"
              << "# Save this to a file, edit any line, and pass it as --config.\n"
              << "# Later lines override earlier ones; the preset line restores\n"
              << "# these values first.\n"
              << efi::config_to_text(cfg);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Extended fiducial inference for statistical models"};
    app.require_subcommand(1);
    CliState cli;

    auto add_common = [&cli](CLI::App* cmd, bool with_threads) {
        cmd->add_option("--config", cli.config_path,
                        "experiment config file (key = value lines)");
        cmd->add_option("--out-dir", cli.out_dir, "output directory");
        auto* seed =
            cmd->add_option("--seed", cli.seed, "override the config seed");
        seed->each([&cli](const std::string&) { cli.seed_set = true; });
        if (with_threads)
            cmd->add_option("--threads", cli.threads,
                            "worker threads for replicated runs")
                ->check(CLI::PositiveNumber);
    };

    CLI::App* simulate =
        app.add_subcommand("simulate", "draw a dataset from the configured model");
    add_common(simulate, false);
    simulate->add_option("output", cli.out_path,
                         "output CSV path (default <out-dir>/data.csv)");

    CLI::App* fit = app.add_subcommand(
        "fit", "run the fiducial chain on a dataset and write samples");
    add_common(fit, false);
    fit->add_option("--data", cli.data_path, "input dataset CSV")->required();

    CLI::App* replicate = app.add_subcommand(
        "replicate", "replicate the experiment and report coverage per method");
    add_common(replicate, true);
    replicate->add_option("--method", cli.method,
                          "run only this method from the config");

    CLI::App* baseline = app.add_subcommand(
        "baseline", "run the closed-form baseline methods on a dataset");
    add_common(baseline, false);
    baseline->add_option("--data", cli.data_path, "input dataset CSV")
        ->required();
    baseline->add_option("--method", cli.method,
                         "run only this method from the config");

    CLI::App* presets = app.add_subcommand(
        "presets", "list presets, or print one as an annotated config");
    presets->add_option("name", cli.preset_name, "preset to print");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(cli);
        if (fit->parsed()) return cmd_fit(cli);
        if (replicate->parsed()) return cmd_replicate(cli);
        if (baseline->parsed()) return cmd_baseline(cli);
        if (presets->parsed()) return cmd_presets(cli);
    } catch (const efi::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const efi::DivergenceError& e) {
        std::cerr << "chain diverged at iteration " << e.iteration
                  << " (last finite energy " << e.last_energy << ")\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
