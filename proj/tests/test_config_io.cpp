#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "gaussdrift/config.hpp"
#include "gaussdrift/io.hpp"

using namespace gaussdrift;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("gaussdrift_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const {
        return (path / name).string();
    }
};

}  // namespace

TEST_CASE("config parsing") {
    SUBCASE("empty input yields valid defaults") {
        const RunConfig c = parse_config("");
        CHECK(c.model.width == 25.0);
        CHECK(c.bath.max_active == 1);
        CHECK(c.delta_x_list == std::vector<double>{10.0, 20.0, 30.0, 40.0});
        CHECK(c.coherence_mode == CoherenceMode::kAveragedOperator);
    }

    SUBCASE("comments, blank lines, assignments") {
        const RunConfig c = parse_config(
            "# a comment\n"
            "\n"
            "bath.temperature = 0.5   # trailing comment\n"
            "delta_x_list = 2, 4, 6, 8\n"
            "bath.mode = roster\n"
            "coherence_mode = mean-of-norms\n"
            "master_seed = 18446744073709551615\n");
        CHECK(c.bath.temperature == 0.5);
        CHECK(c.delta_x_list == std::vector<double>{2.0, 4.0, 6.0, 8.0});
        CHECK(c.bath.mode == BathParams::Mode::kRoster);
        CHECK(c.coherence_mode == CoherenceMode::kMeanOfNorms);
        CHECK(c.master_seed == 18446744073709551615ULL);
    }

    SUBCASE("constraint violations name the key") {
        try {
            parse_config("bath.density = -1\n");
            FAIL("expected a config error");
        } catch (const Error& e) {
            CHECK(e.category() == "config");
            CHECK(std::string(e.what()).find("bath.density") != std::string::npos);
        }
    }

    SUBCASE("typos are unknown keys") {
        try {
            parse_config("bath.densty = 1\n");
            FAIL("expected a config error");
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find("bath.densty") != std::string::npos);
            CHECK(std::string(e.what()).find("line 1") != std::string::npos);
        }
    }

    SUBCASE("parse errors carry line numbers") {
        try {
            parse_config("bath.temperature = 1\nnot a key value pair\n");
            FAIL("expected a config error");
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        }
    }

    SUBCASE("bad enum values are rejected") {
        CHECK_THROWS_AS(parse_config("bath.mode = magic\n"), Error);
        CHECK_THROWS_AS(parse_config("coherence_mode = magic\n"), Error);
        CHECK_THROWS_AS(parse_config("experiment.separation = diagonal\n"), Error);
    }

    SUBCASE("bath.mass also sets the model mass") {
        const RunConfig c = parse_config("bath.mass = 0.125\n");
        CHECK(c.bath.mass == 0.125);
        CHECK(c.model.m_env == 0.125);
    }

    SUBCASE("a vicinity radius inside the interaction range warns") {
        const RunConfig c = parse_config(
            "model.width = 25\nvicinity.radius = 10\n");
        REQUIRE(c.warnings.size() == 1);
        CHECK(c.warnings[0].find("vicinity.radius") != std::string::npos);
    }

    SUBCASE("echo round-trips through the parser") {
        RunConfig c = parse_config("bath.temperature = 3.25\nn_samples = 17\n");
        const RunConfig c2 = parse_config(config_echo(c));
        CHECK(c2.bath.temperature == c.bath.temperature);
        CHECK(c2.n_samples == c.n_samples);
        CHECK(c2.delta_x_list == c.delta_x_list);
        CHECK(c2.master_seed == c.master_seed);
    }
}

TEST_CASE("series csv round trip") {
    TempDir tmp;
    CoherenceSeries s;
    // Awkward values exercise shortest-round-trip formatting.
    s.times = {0.0, 0.1, 1.0 / 3.0, 2.5000000000000004};
    s.values = {1.0, 0.987654321012345678, 3.3e-12, 0.5};
    s.stderrs = {0.0, 1e-300, 0.25, 1.0 / 7.0};

    const std::string path = tmp.file("series_dx2.csv");
    write_series_csv(path, s);
    const CoherenceSeries r = read_series_csv(path);

    REQUIRE(r.times.size() == s.times.size());
    for (std::size_t i = 0; i < s.times.size(); ++i) {
        CHECK(r.times[i] == s.times[i]);      // bitwise round trip
        CHECK(r.values[i] == s.values[i]);
        CHECK(r.stderrs[i] == s.stderrs[i]);
    }

    // Header and locale-independent formatting.
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "time,coherence,stderr");

    CHECK_THROWS_AS(read_series_csv(tmp.file("missing.csv")), Error);
}

TEST_CASE("summary and manifest files") {
    TempDir tmp;
    SummaryRow row;
    row.delta_x = 10.0;
    row.gamma = 0.123456789012345;
    row.gamma_stderr = 0.01;
    row.r_squared = 0.99;
    row.n_used_realizations = 200;
    write_summary_csv(tmp.file("summary.csv"), {row});

    std::ifstream in(tmp.file("summary.csv"));
    std::string header, line;
    std::getline(in, header);
    std::getline(in, line);
    CHECK(header == "delta_x,gamma,gamma_stderr,r_squared,n_used_realizations");
    CHECK(line == "10,0.123456789012345,0.01,0.99,200");

    RunConfig config;
    write_manifest(tmp.file("manifest.txt"), config, 1.5, "gaussdrift sweep");
    std::ifstream min(tmp.file("manifest.txt"));
    std::string text((std::istreambuf_iterator<char>(min)),
                     std::istreambuf_iterator<char>());
    CHECK(text.find("version = ") != std::string::npos);
    CHECK(text.find("wall_seconds = 1.5") != std::string::npos);
    CHECK(text.find("master_seed = ") != std::string::npos);
    CHECK(text.find("command = gaussdrift sweep") != std::string::npos);
}

TEST_CASE("filenames and plot scripts") {
    CHECK(series_filename(10.0) == "series_dx10.csv");
    CHECK(series_filename(2.5) == "series_dx2.5.csv");
    CHECK(series_filename(0.0) == "series_dx0.csv");

    TempDir tmp;
    write_gnuplot_series(tmp.file("fig_series.gp"), {10.0, 20.0});
    write_gnuplot_summary(tmp.file("fig_summary.gp"));
    std::ifstream a(tmp.file("fig_series.gp"));
    std::string sa((std::istreambuf_iterator<char>(a)),
                   std::istreambuf_iterator<char>());
    CHECK(sa.find("series_dx10.csv") != std::string::npos);
    CHECK(sa.find("series_dx20.csv") != std::string::npos);
    CHECK(sa.find("logscale y") != std::string::npos);
}
