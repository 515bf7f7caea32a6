// Batch front-end: configure, execute and export decoherence runs.
#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

#include "gaussdrift/experiment.hpp"
#include "gaussdrift/io.hpp"

namespace fs = std::filesystem;
using namespace gaussdrift;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    bool gnuplot = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "configuration file (key = value)");
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--seed", [&opts](const CLI::results_t& res) {
        opts.seed = std::stoull(res[0]);
        return true;
    }, "master seed (overrides config)")->expected(1);
    cmd->add_option("--threads", [&opts](const CLI::results_t& res) {
        opts.threads = std::stoi(res[0]);
        return true;
    }, "worker threads, 0 = auto (overrides config)")->expected(1);
    cmd->add_flag("--gnuplot", opts.gnuplot, "emit ready-to-run plot scripts");
}

RunConfig assemble_config(const CommonOpts& opts, bool& threads_from_config) {
    RunConfig config;
    threads_from_config = false;
    if (!opts.config_path.empty()) {
        config = load_config(opts.config_path);
        // The key-value file always assigns threads explicitly or leaves the
        // default 0; treat a nonzero value as an explicit choice.
        threads_from_config = config.threads != 0;
    }
    if (opts.seed) config.master_seed = *opts.seed;
    if (!opts.out_dir.empty()) config.output_dir = opts.out_dir;

    if (opts.threads) {
        config.threads = *opts.threads;
    } else if (!threads_from_config) {
        if (const char* env = std::getenv("GAUSSDRIFT_THREADS"))
            config.threads = std::atoi(env);
    }
    validate_config(config);
    for (const auto& w : config.warnings) std::cerr << "warning: " << w << "\n";
    return config;
}

SummaryRow to_row(const DxResult& r) {
    SummaryRow row;
    row.delta_x = r.delta_x;
    row.gamma = r.fit.gamma;
    row.gamma_stderr = r.fit.gamma_stderr;
    row.r_squared = r.fit.r_squared;
    row.n_used_realizations = r.n_used;
    return row;
}

int write_outputs(const RunConfig& config, const std::vector<DxResult>& results,
                  double wall_seconds, const std::string& command, bool gnuplot) {
    fs::create_directories(config.output_dir);
    const fs::path dir(config.output_dir);

    std::vector<SummaryRow> rows;
    std::vector<double> dx_values;
    bool all_ok = true;
    for (const auto& r : results) {
        write_series_csv((dir / series_filename(r.delta_x)).string(), r.series);
        dx_values.push_back(r.delta_x);
        if (r.fit_ok) {
            rows.push_back(to_row(r));
        } else {
            all_ok = false;
            std::cerr << "error: fit: delta_x = " << format_double(r.delta_x)
                      << ": " << r.fit_error << "\n";
        }
        for (const auto& f : r.failures)
            std::cerr << "warning: excluded " << f << "\n";
        std::cout << "delta_x = " << format_double(r.delta_x)
                  << "  gamma = " << format_double(r.fit.gamma)
                  << " +- " << format_double(r.fit.gamma_stderr)
                  << "  r2 = " << format_double(r.fit.r_squared)
                  << "  realizations = " << r.n_used << "\n";
    }
    write_summary_csv((dir / "summary.csv").string(), rows);
    write_manifest((dir / "manifest.txt").string(), config, wall_seconds, command);
    if (gnuplot) {
        write_gnuplot_series((dir / "fig_series.gp").string(), dx_values);
        write_gnuplot_summary((dir / "fig_summary.gp").string());
    }
    return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gaussian phase-space decoherence simulator"};
    app.require_subcommand(1);

    CommonOpts run_opts, sweep_opts, fit_opts;
    double run_dx = -1.0;
    bool run_dx_given = false;
    std::string fit_csv;

    auto* run_cmd = app.add_subcommand("run", "single separation value");
    add_common(run_cmd, run_opts);
    run_cmd->add_option("--dx", [&](const CLI::results_t& res) {
        run_dx = std::stod(res[0]);
        run_dx_given = true;
        return true;
    }, "separation (default: first entry of delta_x_list)")->expected(1);

    auto* sweep_cmd = app.add_subcommand("sweep", "iterate delta_x_list");
    add_common(sweep_cmd, sweep_opts);

    auto* fit_cmd = app.add_subcommand("fit", "re-fit an existing series CSV");
    add_common(fit_cmd, fit_opts);
    fit_cmd->add_option("csv", fit_csv, "series CSV path")->required();

    CLI11_PARSE(app, argc, argv);

    std::string command;
    for (int i = 0; i < argc; ++i) command += std::string(i ? " " : "") + argv[i];

    try {
        const auto t0 = std::chrono::steady_clock::now();
        auto elapsed = [&t0]() {
            return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                 t0).count();
        };

        if (run_cmd->parsed()) {
            bool dummy;
            RunConfig config = assemble_config(run_opts, dummy);
            const double dx = run_dx_given ? run_dx : config.delta_x_list.at(0);
            if (dx < 0) throw usage_error("--dx must be >= 0");
            std::vector<DxResult> results = {run_one_dx(config, dx)};
            return write_outputs(config, results, elapsed(), command,
                                 run_opts.gnuplot);
        }

        if (sweep_cmd->parsed()) {
            bool dummy;
            RunConfig config = assemble_config(sweep_opts, dummy);
            ExperimentResult res = run_experiment(config);
            return write_outputs(config, res.per_dx, elapsed(), command,
                                 sweep_opts.gnuplot);
        }

        // fit
        CoherenceSeries series = read_series_csv(fit_csv);
        DecayFit fit = fit_decay(series);

        // Recover the separation from a series_dx<value>.csv filename.
        double dx = std::nan("");
        const std::string stem = fs::path(fit_csv).stem().string();
        if (stem.rfind("series_dx", 0) == 0) {
            try {
                dx = std::stod(stem.substr(9));
            } catch (...) {
            }
        }

        SummaryRow row;
        row.delta_x = dx;
        row.gamma = fit.gamma;
        row.gamma_stderr = fit.gamma_stderr;
        row.r_squared = fit.r_squared;
        row.n_used_realizations = series.n_realizations;

        const std::string out_dir =
            fit_opts.out_dir.empty() ? "." : fit_opts.out_dir;
        fs::create_directories(out_dir);
        write_summary_csv((fs::path(out_dir) / "fit_summary.csv").string(), {row});
        std::cout << "delta_x,gamma,gamma_stderr,r_squared,n_used_realizations\n"
                  << format_double(row.delta_x) << ',' << format_double(row.gamma)
                  << ',' << format_double(row.gamma_stderr) << ','
                  << format_double(row.r_squared) << ','
                  << row.n_used_realizations << "\n";
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.category() << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 1;
    }
}
