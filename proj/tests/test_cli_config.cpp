#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "vactof/vactof.hpp"

using namespace vactof;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, const std::string& contents)
        : path("vactof_test_" + name) {
        std::ofstream out(path, std::ios::binary);
        out << contents;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

} // namespace

TEST_CASE("config file values override the defaults") {
    const TempFile f("ok.ini",
                     "[source]\n"
                     "V2 = -950\n"
                     "L = 0.8\n"
                     "sigma_t = 1e-9\n"
                     "\n"
                     "[sweep]\n"
                     "species = benzene, argon\n"
                     "V2_values = -900, -950\n"
                     "\n"
                     "[wien]\n"
                     "apertures = 1e-4, 1e-3\n"
                     "\n"
                     "[sim]\n"
                     "n_bits = 5000\n"
                     "seed = 7\n"
                     "\n"
                     "[output]\n"
                     "dir = outdir\n");
    const RunConfig run = load_run_config(f.path);
    CHECK(run.default_V2 == -950.0);
    CHECK(run.default_L == 0.8);
    CHECK(run.sigma_t == 1e-9);
    REQUIRE(run.species_names.size() == 2);
    CHECK(run.species_names[0] == "benzene");
    CHECK(run.species_names[1] == "argon");
    REQUIRE(run.v2_values.size() == 2);
    CHECK(run.v2_values[1] == -950.0);
    REQUIRE(run.apertures.size() == 2);
    CHECK(run.apertures[0] == 1e-4);
    CHECK(run.n_bits == 5000);
    CHECK(run.seed == 7);
    CHECK(run.out_dir == "outdir");
    // Untouched keys keep their defaults.
    CHECK(run.V0 == 65.96);
    CHECK(run.wien_b == 0.3937);
}

TEST_CASE("unknown keys are rejected with a line number") {
    const TempFile f("unknown.ini", "[source]\nV2 = -950\nbogus = 1\n");
    try {
        load_run_config(f.path);
        FAIL("expected config_error");
    } catch (const config_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("line 3") != std::string::npos);
        CHECK(msg.find("bogus") != std::string::npos);
    }
}

TEST_CASE("malformed numbers and sections are rejected") {
    const TempFile bad_num("badnum.ini", "[source]\nV2 = not-a-number\n");
    CHECK_THROWS_AS(load_run_config(bad_num.path), config_error);
    const TempFile bad_sec("badsec.ini", "[source\nV2 = -950\n");
    CHECK_THROWS_AS(load_run_config(bad_sec.path), config_error);
    const TempFile no_eq("noeq.ini", "[source]\njust words\n");
    CHECK_THROWS_AS(load_run_config(no_eq.path), config_error);
    const TempFile empty_list("elist.ini", "[sweep]\nV2_values = ,\n");
    CHECK_THROWS_AS(load_run_config(empty_list.path), config_error);
    CHECK_THROWS_AS(load_run_config("no_such_file.ini"), config_error);
}

TEST_CASE("comments and blank lines are ignored") {
    const TempFile f("comments.ini",
                     "# a comment\n"
                     "; another\n"
                     "\n"
                     "[sim]\n"
                     "n_bits = 123\n");
    CHECK(load_run_config(f.path).n_bits == 123);
}

TEST_CASE("resolved defaults") {
    const RunConfig run;
    CHECK(run.resolved_x0_mean() == Catch::Approx(run.d1 / 2.0));
    const auto lengths = run.resolved_zero_field_lengths();
    REQUIRE(lengths.size() == 20);
    CHECK(lengths.front() == 1.0);
    CHECK(lengths.back() == 20.0);
    // source() produces a validated configuration.
    const SourceConfig cfg = run.default_source();
    CHECK(cfg.V2 == run.default_V2);
    CHECK(cfg.L == run.default_L);
    const SourceConfig zf = run.zero_field_source(2.0);
    CHECK(zf.zero_field());
    CHECK(zf.L == 2.0);
}

TEST_CASE("explicit x0_mean survives resolution") {
    const TempFile f("x0.ini", "[source]\nx0_mean = 0.003\n");
    CHECK(load_run_config(f.path).resolved_x0_mean() == 0.003);
}

TEST_CASE("CSV output is byte-identical across repeated writes") {
    auto write_file = [](const std::string& path) {
        CsvWriter csv(path);
        csv.metadata("seed", fmt(std::uint64_t(42)));
        csv.header({"a", "b"});
        csv.row({fmt(1.0 / 3.0), fmt(1.3765411285674019e-5)});
        csv.row({fmt(-0.0), fmt(9.87654321e300)});
    };
    write_file("vactof_test_csv1.csv");
    write_file("vactof_test_csv2.csv");
    const std::string a = slurp("vactof_test_csv1.csv");
    const std::string b = slurp("vactof_test_csv2.csv");
    CHECK(a == b);
    CHECK(a.find("# seed = 42") != std::string::npos);
    CHECK(a.find("a,b") != std::string::npos);
    std::remove("vactof_test_csv1.csv");
    std::remove("vactof_test_csv2.csv");
}

TEST_CASE("fixed-format rendering is locale-independent and stable") {
    CHECK(fmt(0.5) == "0.5");
    CHECK(fmt(1.3765411285674019e-5) == "1.37654112857e-05");
    CHECK(fmt(int(7)) == "7");
    CHECK(fmt(1e300) == "1e+300");
}

TEST_CASE("substreams are decorrelated and order-independent") {
    // Same root seed, different purposes or indices give different streams;
    // the same triple always gives the same stream.
    CHECK(substream_seed(42, StreamPurpose::bits, 0) !=
          substream_seed(42, StreamPurpose::velocity, 0));
    CHECK(substream_seed(42, StreamPurpose::bits, 0) !=
          substream_seed(42, StreamPurpose::bits, 1));
    CHECK(substream_seed(42, StreamPurpose::bits, 5) ==
          substream_seed(42, StreamPurpose::bits, 5));
    auto a = make_stream(42, StreamPurpose::pilot);
    auto b = make_stream(42, StreamPurpose::pilot);
    CHECK(a() == b());
}
