#include "gaussdrift/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace gaussdrift {

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

std::string series_filename(double delta_x) {
    return "series_dx" + format_double(delta_x) + ".csv";
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);  // fixed newlines on all platforms
    if (!out) throw data_error("cannot write file: " + path);
    return out;
}

double parse_field(const std::string& field, const std::string& path, int line) {
    double v = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size())
        throw data_error("bad number '" + field + "' in " + path + " line " +
                         std::to_string(line));
    return v;
}

}  // namespace

void write_series_csv(const std::string& path, const CoherenceSeries& series) {
    auto out = open_out(path);
    out << "time,coherence,stderr\n";
    for (std::size_t i = 0; i < series.times.size(); ++i)
        out << format_double(series.times[i]) << ','
            << format_double(series.values[i]) << ','
            << format_double(series.stderrs.empty() ? 0.0 : series.stderrs[i])
            << '\n';
}

CoherenceSeries read_series_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open series file: " + path);

    CoherenceSeries series;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1 && line.rfind("time", 0) == 0) continue;

        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 3)
            throw data_error("expected 3 columns in " + path + " line " +
                             std::to_string(line_no));
        series.times.push_back(parse_field(fields[0], path, line_no));
        series.values.push_back(parse_field(fields[1], path, line_no));
        series.stderrs.push_back(parse_field(fields[2], path, line_no));
    }
    if (series.times.empty()) throw data_error("empty series file: " + path);
    return series;
}

void write_summary_csv(const std::string& path,
                       const std::vector<SummaryRow>& rows) {
    auto out = open_out(path);
    out << "delta_x,gamma,gamma_stderr,r_squared,n_used_realizations\n";
    for (const auto& r : rows)
        out << format_double(r.delta_x) << ',' << format_double(r.gamma) << ','
            << format_double(r.gamma_stderr) << ',' << format_double(r.r_squared)
            << ',' << r.n_used_realizations << '\n';
}

void write_manifest(const std::string& path, const RunConfig& config,
                    double wall_seconds, const std::string& command) {
    auto out = open_out(path);
    out << "# run metadata\n"
        << "version = " << kVersion << "\n"
        << "command = " << command << "\n"
        << "wall_seconds = " << format_double(wall_seconds) << "\n"
        << "# effective configuration\n"
        << config_echo(config);
}

void write_gnuplot_series(const std::string& path,
                          const std::vector<double>& delta_x_values) {
    auto out = open_out(path);
    out << "# coherence decay curves; run: gnuplot " << path << "\n"
        << "set datafile separator ','\n"
        << "set logscale y\n"
        << "set xlabel 'time [oscillator periods]'\n"
        << "set ylabel 'coherence'\n"
        << "set key top right\n"
        << "set terminal pngcairo size 900,600\n"
        << "set output 'coherence_decay.png'\n"
        << "plot ";
    for (std::size_t i = 0; i < delta_x_values.size(); ++i) {
        if (i) out << ", \\\n     ";
        out << "'" << series_filename(delta_x_values[i])
            << "' using 1:2:3 with yerrorlines title 'dx = "
            << format_double(delta_x_values[i]) << "'";
    }
    out << "\n";
}

void write_gnuplot_summary(const std::string& path) {
    auto out = open_out(path);
    out << "# decay constant vs separation; run: gnuplot " << path << "\n"
        << "set datafile separator ','\n"
        << "set logscale xy\n"
        << "set xlabel 'phase-space separation [oscillator lengths]'\n"
        << "set ylabel 'decay constant [1/period]'\n"
        << "set key top left\n"
        << "set terminal pngcairo size 900,600\n"
        << "set output 'decay_constants.png'\n"
        << "# quadratic guide through the first point\n"
        << "stats 'summary.csv' using 1:2 every ::0::0 nooutput\n"
        << "c = STATS_min_y / (STATS_min_x ** 2)\n"
        << "plot 'summary.csv' using 1:2:3 with yerrorbars title 'fitted', \\\n"
        << "     c * x**2 with lines dashtype 2 title 'quadratic'\n";
}

}  // namespace gaussdrift
