#include "gaussdrift/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace gaussdrift {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return x;
    } catch (...) {
        throw config_error("invalid number for key '" + key + "': " + v);
    }
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long long x = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return x;
    } catch (...) {
        throw config_error("invalid integer for key '" + key + "': " + v);
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const unsigned long long x = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return x;
    } catch (...) {
        throw config_error("invalid seed for key '" + key + "': " + v);
    }
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(parse_double(key, item));
    }
    if (out.empty()) throw config_error("empty list for key '" + key + "'");
    return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& key_table() {
    static const std::map<std::string, Setter> table = {
        {"model.epsilon", [](RunConfig& c, const std::string& k, const std::string& v) { c.model.epsilon = parse_double(k, v); }},
        {"model.width", [](RunConfig& c, const std::string& k, const std::string& v) { c.model.width = parse_double(k, v); }},
        {"bath.temperature", [](RunConfig& c, const std::string& k, const std::string& v) { c.bath.temperature = parse_double(k, v); }},
        {"bath.density", [](RunConfig& c, const std::string& k, const std::string& v) { c.bath.density = parse_double(k, v); }},
        {"bath.mass", [](RunConfig& c, const std::string& k, const std::string& v) { c.bath.mass = parse_double(k, v); c.model.m_env = c.bath.mass; }},
        {"bath.env_width", [](RunConfig& c, const std::string& k, const std::string& v) { c.bath.env_width = parse_double(k, v); }},
        {"bath.mode", [](RunConfig& c, const std::string& k, const std::string& v) {
             if (v == "flux") c.bath.mode = BathParams::Mode::kFlux;
             else if (v == "roster") c.bath.mode = BathParams::Mode::kRoster;
             else throw config_error("key '" + k + "' must be flux or roster, got: " + v);
         }},
        {"bath.roster_size", [](RunConfig& c, const std::string& k, const std::string& v) { c.bath.roster_size = static_cast<int>(parse_int(k, v)); }},
        {"vicinity.radius", [](RunConfig& c, const std::string& k, const std::string& v) { c.bath.vicinity_radius = parse_double(k, v); }},
        {"vicinity.max_active", [](RunConfig& c, const std::string& k, const std::string& v) { c.bath.max_active = static_cast<int>(parse_int(k, v)); }},
        {"ode_rel_tol", [](RunConfig& c, const std::string& k, const std::string& v) { c.ode.rel_tol = parse_double(k, v); }},
        {"ode_abs_tol", [](RunConfig& c, const std::string& k, const std::string& v) { c.ode.abs_tol = parse_double(k, v); }},
        {"ode_max_step", [](RunConfig& c, const std::string& k, const std::string& v) { c.ode.max_step = parse_double(k, v); }},
        {"delta_x_list", [](RunConfig& c, const std::string& k, const std::string& v) { c.delta_x_list = parse_list(k, v); }},
        {"t_max", [](RunConfig& c, const std::string& k, const std::string& v) { c.t_max = parse_double(k, v); }},
        {"n_samples", [](RunConfig& c, const std::string& k, const std::string& v) { c.n_samples = static_cast<int>(parse_int(k, v)); }},
        {"n_realizations", [](RunConfig& c, const std::string& k, const std::string& v) { c.n_realizations = static_cast<int>(parse_int(k, v)); }},
        {"master_seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.master_seed = parse_u64(k, v); }},
        {"threads", [](RunConfig& c, const std::string& k, const std::string& v) { c.threads = static_cast<int>(parse_int(k, v)); }},
        {"output_dir", [](RunConfig& c, const std::string&, const std::string& v) { c.output_dir = v; }},
        {"coherence_mode", [](RunConfig& c, const std::string& k, const std::string& v) {
             if (v == "averaged-operator") c.coherence_mode = CoherenceMode::kAveragedOperator;
             else if (v == "mean-of-norms") c.coherence_mode = CoherenceMode::kMeanOfNorms;
             else throw config_error("key '" + k + "' must be averaged-operator or mean-of-norms, got: " + v);
         }},
        {"experiment.separation", [](RunConfig& c, const std::string& k, const std::string& v) {
             if (v == "position") c.separation = Separation::kPosition;
             else if (v == "momentum") c.separation = Separation::kMomentum;
             else if (v == "mixed") c.separation = Separation::kMixed;
             else throw config_error("key '" + k + "' must be position, momentum or mixed, got: " + v);
         }},
    };
    return table;
}

void require(bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw config_error("constraint violation for key '" + key + "': " + what);
}

RunConfig parse_stream(std::istream& in) {
    RunConfig config;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("parse error at line " + std::to_string(line_no) +
                               ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));

        const auto it = key_table().find(key);
        if (it == key_table().end())
            throw config_error("unknown key '" + key + "' at line " +
                               std::to_string(line_no));
        it->second(config, key, value);
    }
    validate_config(config);
    return config;
}

}  // namespace

void validate_config(RunConfig& config) {
    require(config.model.epsilon >= 0.0, "model.epsilon", "must be >= 0");
    require(config.model.width > 0.0, "model.width", "must be > 0");
    require(config.bath.temperature >= 0.0, "bath.temperature", "must be >= 0");
    require(config.bath.density >= 0.0, "bath.density", "must be >= 0");
    require(config.bath.mass > 0.0, "bath.mass", "must be > 0");
    require(config.bath.env_width > 0.0, "bath.env_width", "must be > 0");
    require(config.bath.vicinity_radius > 0.0, "vicinity.radius", "must be > 0");
    require(config.bath.max_active >= 1, "vicinity.max_active", "must be >= 1");
    require(config.bath.roster_size >= 1, "bath.roster_size", "must be >= 1");
    require(config.ode.rel_tol > 0.0, "ode_rel_tol", "must be > 0");
    require(config.ode.abs_tol > 0.0, "ode_abs_tol", "must be > 0");
    require(config.ode.max_step > 0.0, "ode_max_step", "must be > 0");
    require(config.t_max > 0.0, "t_max", "must be > 0");
    require(config.n_samples >= 2, "n_samples", "must be >= 2");
    require(config.n_realizations >= 1, "n_realizations", "must be >= 1");
    require(config.threads >= 0, "threads", "must be >= 0");
    for (double dx : config.delta_x_list)
        require(dx >= 0.0, "delta_x_list", "separations must be >= 0");

    if (config.bath.vicinity_radius <= config.model.width)
        config.warnings.push_back(
            "vicinity.radius <= model.width: the interaction is not negligible "
            "at the vicinity boundary");
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    return parse_stream(in);
}

RunConfig parse_config(const std::string& text) {
    std::istringstream in(text);
    return parse_stream(in);
}

const char* to_string(CoherenceMode mode) {
    return mode == CoherenceMode::kAveragedOperator ? "averaged-operator"
                                                    : "mean-of-norms";
}

const char* to_string(Separation separation) {
    switch (separation) {
        case Separation::kPosition: return "position";
        case Separation::kMomentum: return "momentum";
        default: return "mixed";
    }
}

std::string config_echo(const RunConfig& c) {
    std::ostringstream out;
    out.precision(17);
    out << "model.epsilon = " << c.model.epsilon << "\n"
        << "model.width = " << c.model.width << "\n"
        << "bath.temperature = " << c.bath.temperature << "\n"
        << "bath.density = " << c.bath.density << "\n"
        << "bath.mass = " << c.bath.mass << "\n"
        << "bath.env_width = " << c.bath.env_width << "\n"
        << "bath.mode = "
        << (c.bath.mode == BathParams::Mode::kFlux ? "flux" : "roster") << "\n"
        << "bath.roster_size = " << c.bath.roster_size << "\n"
        << "vicinity.radius = " << c.bath.vicinity_radius << "\n"
        << "vicinity.max_active = " << c.bath.max_active << "\n"
        << "ode_rel_tol = " << c.ode.rel_tol << "\n"
        << "ode_abs_tol = " << c.ode.abs_tol << "\n"
        << "ode_max_step = " << c.ode.max_step << "\n";
    out << "delta_x_list = ";
    for (std::size_t i = 0; i < c.delta_x_list.size(); ++i)
        out << (i ? ", " : "") << c.delta_x_list[i];
    out << "\n"
        << "t_max = " << c.t_max << "\n"
        << "n_samples = " << c.n_samples << "\n"
        << "n_realizations = " << c.n_realizations << "\n"
        << "master_seed = " << c.master_seed << "\n"
        << "threads = " << c.threads << "\n"
        << "output_dir = " << c.output_dir << "\n"
        << "coherence_mode = " << to_string(c.coherence_mode) << "\n"
        << "experiment.separation = " << to_string(c.separation) << "\n";
    return out.str();
}

}  // namespace gaussdrift
