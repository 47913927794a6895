#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "hmlab/config.h"
#include "hmlab/error.h"
#include "hmlab/experiments.h"
#include "hmlab/report.h"

using namespace hmlab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("hmlab_cli_test_" + name);
    fs::remove_all(p);
    return p;
}

int cli(const std::string& args, std::string* out = nullptr) {
    const std::string cmd = std::string(HMLAB_CLI_PATH) + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string text;
    char buf[4096];
    while (std::size_t n = fread(buf, 1, sizeof buf, pipe)) text.append(buf, n);
    const int status = pclose(pipe);
    if (out) *out = text;
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_config(const std::string& name, const std::string& body) {
    const fs::path p = scratch(name + ".cfg");
    std::ofstream(p) << body;
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

Config parse(const std::string& text) {
    std::istringstream in(text);
    return Config::parse(in);
}

ErrorCode code_of(const std::string& text) {
    try {
        parse(text);
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("config parsing") {
    const Config c = parse("# comment\n\nexperiment = corona   # trailing\nseed=9\nriesz_sizes = 10, 20 ,40\nA0 = auto\n");
    CHECK(c.str("experiment") == "corona");
    CHECK(c.seed() == 9);
    CHECK(c.list("riesz_sizes") == std::vector<double>{10, 20, 40});
    CHECK(!c.maybe("A0"));
    CHECK(!c.lattice().A0);
    CHECK(c.num("eta") == 0.02);
    CHECK(c.effective().at("walks") == "100000");
    CHECK(c.effective().size() == config_schema().size());

    CHECK(code_of("experiment = corona\nno_such_key = 1\n") == ErrorCode::ConfigError);
    CHECK(code_of("experiment = corona\neta = 0.5\n") == ErrorCode::ConfigError);
    CHECK(code_of("experiment = corona\nwalks = 1.5\n") == ErrorCode::ConfigError);
    CHECK(code_of("experiment = corona\nseed = 1\nseed = 2\n") == ErrorCode::ConfigError);
    CHECK(code_of("experiment = corona\njust words\n") == ErrorCode::ConfigError);
    CHECK(code_of("seed = 1\n") == ErrorCode::ConfigError);
    CHECK(code_of("experiment = corona\nexport_exits = yes\n") == ErrorCode::ConfigError);
    CHECK(code_of("experiment = corona\nA = 1\n") == ErrorCode::ConfigError);
    CHECK_THROWS_AS(Config::load("/nonexistent/x.cfg"), Error);
}

TEST_CASE("every schema default is valid") {
    Config c = parse("experiment = corona\n");
    for (const ConfigKey& k : config_schema())
        if (!k.fallback.empty()) CHECK_NOTHROW(c.set(k.name, k.fallback));
    CHECK_NOTHROW(c.stopping());
    CHECK_NOTHROW(c.walk());
}

TEST_CASE("builtin measures from config") {
    Config c = parse("experiment = corona\nmeasure = segment_plus_cluster\nmeasure_atoms = 100\ncluster_atoms = 5\n");
    const PointMeasure m = c.measure();
    CHECK(m.size() == 105);
    c.set("measure", "spiral");
    CHECK_THROWS_AS(c.measure(), Error);
}

TEST_CASE("report files and cleanup") {
    Report rep("demo");
    rep.value("a/b", 1.5);
    rep.stochastic("s", 0.25, 0.01, Sampling{100, 7, 1e-4, 0.0});
    rep.check("ok", 1.0, 2.0, true);
    CsvWriter& t = rep.table("t.csv", {"x", "y"});
    t << 1 << 2.5;
    t.end_row();
    const fs::path dir = scratch("report");
    rep.write(dir, nlohmann::json{{"seed", 7}});
    CHECK(slurp(dir / "t.csv") == "x,y\n1,2.5\n");
    CHECK(slurp(dir / "checks.csv") == "check,lhs,rhs,pass\nok,1,2,true\n");
    const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK(summary["results"]["a"]["b"] == 1.5);
    CHECK(summary["results"]["s"]["N"] == 100);
    CHECK(summary["results"]["s"]["stderr"] == 0.01);
    CHECK(summary["all_checks_passed"] == true);
    CHECK_THROWS_AS(rep.table("t.csv", {"z"}), Error);

    // summary.json is written last; when it cannot be, nothing stays behind.
    const fs::path bad = scratch("report_bad");
    fs::create_directories(bad / "summary.json");
    CHECK_THROWS_AS(rep.write(bad, nlohmann::json::object()), Error);
    CHECK(!fs::exists(bad / "checks.csv"));
    CHECK(!fs::exists(bad / "t.csv"));
}

TEST_CASE("registry") {
    const auto& exps = list_experiments();
    REQUIRE(exps.size() == 13);
    CHECK(exps.front().name == "lattice-audit");
    CHECK(exps.back().name == "full-pipeline");
    for (const auto& e : exps) {
        CHECK(!e.description.empty());
        CHECK(fs::exists(fs::path(HMLAB_CONFIG_DIR) / ([&] {
                             std::string s = e.name;
                             for (char& ch : s)
                                 if (ch == '-') ch = '_';
                             return s + ".cfg";
                         }())));
    }
    CHECK_THROWS_AS(run_experiment(parse("experiment = nope\n")), Error);

    std::string out;
    CHECK(cli("list", &out) == 0);
    std::istringstream lines(out);
    std::string line;
    std::size_t i = 0;
    while (std::getline(lines, line)) {
        REQUIRE(i < exps.size());
        CHECK(line.substr(0, line.find('\t')) == exps[i++].name);
    }
    CHECK(i == exps.size());
}

TEST_CASE("cli exit codes") {
    const fs::path out = scratch("exit_out");
    const fs::path bad_eta = write_config("bad_eta", "experiment = key-lemma\neta = 0.5\n");
    CHECK(cli("run --config " + bad_eta.string() + " --out " + out.string()) == 3);
    CHECK(!fs::exists(out));
    const fs::path unknown = write_config("unknown", "experiment = corona\ncolour = blue\n");
    CHECK(cli("run --config " + unknown.string() + " --out " + out.string()) == 3);
    CHECK(cli("run --config /nonexistent.cfg --out " + out.string()) == 3);
    CHECK(cli("run --out " + out.string()) == 3);

    // B fails the doubling hypothesis when C2 is small.
    const fs::path pre = write_config("precondition",
                                      "experiment = bad-cubes\nmeasure = circle\nball_center = 1, 0\n"
                                      "ball_radius = 0.5\nC2 = 2\nwalks = 100\n");
    CHECK(cli("run --config " + pre.string() + " --out " + out.string()) == 2);
    CHECK(!fs::exists(out));
}

TEST_CASE("cli reruns are byte-identical") {
    const fs::path cfg = write_config("rerun", "experiment = wos-validate\nwalks = 4000\nseed = 7\nexport_exits = true\n");
    const fs::path a = scratch("rerun_a"), b = scratch("rerun_b"), c = scratch("rerun_c");
    REQUIRE(cli("run --config " + cfg.string() + " --out " + a.string()) == 0);
    REQUIRE(cli("run --config " + cfg.string() + " --out " + b.string()) == 0);
    REQUIRE(cli("run --config " + cfg.string() + " --seed 8 --out " + c.string()) == 0);
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
        const fs::path name = entry.path().filename();
        CHECK(slurp(a / name) == slurp(b / name));
        ++files;
    }
    CHECK(files == 4);
    CHECK(fs::exists(a / "exits_pole.csv"));
    CHECK(slurp(a / "summary.json") != slurp(c / "summary.json"));
    const auto summary = nlohmann::json::parse(slurp(c / "summary.json"));
    CHECK(summary["seed"] == 8);
}

TEST_CASE("cli lattice audit flag") {
    const fs::path cfg = write_config("audit", "experiment = riesz-norm\nriesz_sizes = 20, 40\n");
    const fs::path out = scratch("audit_out");
    REQUIRE(cli("run --config " + cfg.string() + " --out " + out.string()) == 0);
    CHECK(!fs::exists(out / "lattice_audit.csv"));

    const fs::path cfg2 = write_config("audit2", "experiment = corona\nmeasure = segment\nmeasure_atoms = 200\n");
    REQUIRE(cli("run --config " + cfg2.string() + " --lattice-audit --out " + out.string()) == 0);
    const std::string audit = slurp(out / "lattice_audit.csv");
    CHECK(audit.rfind("lattice,check,generation,tested,failures,worst_margin\n", 0) == 0);
    CHECK(audit.find("\nmu,") != std::string::npos);
}
