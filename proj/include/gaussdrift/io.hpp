#pragma once

#include <string>
#include <vector>

#include "gaussdrift/experiment.hpp"
#include "gaussdrift/observables.hpp"

namespace gaussdrift {

inline constexpr const char* kVersion = "1.0.0";

/// Locale-independent shortest round-trip formatting ('.' decimal point).
std::string format_double(double value);

std::string series_filename(double delta_x);

/// CSV with header `time,coherence,stderr`.
void write_series_csv(const std::string& path, const CoherenceSeries& series);
CoherenceSeries read_series_csv(const std::string& path);

struct SummaryRow {
    double delta_x = 0.0;
    double gamma = 0.0;
    double gamma_stderr = 0.0;
    double r_squared = 0.0;
    int n_used_realizations = 0;
};

/// CSV with header `delta_x,gamma,gamma_stderr,r_squared,n_used_realizations`.
void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows);

/// Plain key = value run metadata: config echo, seed, version, wall time.
void write_manifest(const std::string& path, const RunConfig& config,
                    double wall_seconds, const std::string& command);

/// Ready-to-run plot scripts for the coherence curves and the decay-constant
/// scaling figure.
void write_gnuplot_series(const std::string& path,
                          const std::vector<double>& delta_x_values);
void write_gnuplot_summary(const std::string& path);

}  // namespace gaussdrift
