#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const std::string kCli = PQVI_CLI;
const std::string kConfigs = PQVI_CONFIG_DIR;

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("pqvi_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

struct Outcome {
    int code;
    std::string err;
};

Outcome cli(const std::string& args) {
    const fs::path err = fs::temp_directory_path() / "pqvi_cli_stderr.txt";
    const std::string cmd = "'" + kCli + "' " + args + " > /dev/null 2> '" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
}

}  // namespace

TEST_CASE("scalar example runs, reports clusters, and verifies") {
    const fs::path out = scratch("scalar");
    const Outcome r = cli("run " + kConfigs + "/scalar_example.ini --output-dir " + out.string());
    CHECK(r.code == 0);
    const auto report = nlohmann::json::parse(slurp(out / "report.json"));
    CHECK(report["clusters"]["count"].get<int>() >= 2);
    CHECK(cli("verify " + kConfigs + "/scalar_example.ini " + out.string()).code == 0);

    std::string u = slurp(out / "u.csv");
    const auto row = u.find("\n0.01,");
    REQUIRE(row != std::string::npos);
    const auto end = u.find('\n', row + 1);
    u.replace(row, end - row, "\n0.01,0.25");
    std::ofstream(out / "u.csv") << u;
    const Outcome t = cli("verify " + kConfigs + "/scalar_example.ini " + out.string());
    CHECK(t.code == 4);
    CHECK(t.err.find("node 10") != std::string::npos);
}

TEST_CASE("config errors exit 2") {
    const fs::path dir = scratch("bad");
    std::string text = slurp(kConfigs + "/scalar_example.ini");
    text.replace(text.find("p = 2"), 5, "p = 1.5");
    std::ofstream(dir / "p.ini") << text;
    const Outcome r = cli("run " + (dir / "p.ini").string() + " --output-dir " + (dir / "o").string());
    CHECK(r.code == 2);
    CHECK(r.err.find("space.p") != std::string::npos);
    CHECK(cli("run /nonexistent.ini").code == 2);
    CHECK(cli("frobnicate").code == 2);
    CHECK(cli("run " + kConfigs + "/scalar_example.ini --check bogus").code == 2);
}

TEST_CASE("verify against another grid exits 2") {
    const fs::path out = scratch("grid");
    REQUIRE(cli("run " + kConfigs + "/sweep2d.ini --seed-count 1 --output-dir " + out.string()).code == 0);
    std::string text = slurp(kConfigs + "/sweep2d.ini");
    text.replace(text.find("steps = 400"), 11, "steps = 200");
    std::ofstream(out / "coarse.ini") << text;
    const Outcome r = cli("verify " + (out / "coarse.ini").string() + " " + out.string());
    CHECK(r.code == 2);
    CHECK(cli("verify " + kConfigs + "/sweep2d.ini " + out.string()).code == 0);
}

TEST_CASE("gradient-pde feasibility is reported") {
    const fs::path out = scratch("pde");
    const Outcome r = cli("run " + kConfigs + "/gradient_pde.ini --seed-count 1 --output-dir " + out.string());
    CHECK(r.code == 0);
    const auto report = nlohmann::json::parse(slurp(out / "report.json"));
    CHECK(report["checks"]["gradient_feasibility"]["max_violation"].get<double>() <= 1e-8);
    CHECK(slurp(out / "u.csv").rfind("t,u_0,u_1,", 0) == 0);
}
