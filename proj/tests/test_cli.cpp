#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct CommandResult {
    int exit_code = -1;
    std::string output;
};

CommandResult run_cli(const std::string& args) {
    std::string cmd = std::string(SNNSIM_BINARY) + " " + args + " 2>&1";
    std::array<char, 4096> buf{};
    CommandResult res;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    while (std::size_t got = fread(buf.data(), 1, buf.size(), pipe)) res.output.append(buf.data(), got);
    int status = pclose(pipe);
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return res;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / "snn_cli" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

} // namespace

TEST_CASE("dry run prints the resolved configuration") {
    auto r = run_cli("simulate particle --preset cv_test --N 123 --T 2 --dry-run");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("target = particle") != std::string::npos);
    CHECK(r.output.find("n = 123") != std::string::npos);
    CHECK(r.output.find("J = 3.1") != std::string::npos);
}

TEST_CASE("config errors exit with the dedicated code") {
    auto r = run_cli("simulate particle --preset no_such_preset --dry-run");
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("no_such_preset") != std::string::npos);
}

TEST_CASE("particle run writes manifest and trace, reruns are byte-identical") {
    fs::path dir = fresh_dir("particle");
    std::string args = "simulate particle --preset cv_test --N 500 --T 1 --dt 0.002 "
                       "--seed 7 --out " + dir.string();
    auto r1 = run_cli(args);
    REQUIRE(r1.exit_code == 0);
    REQUIRE(fs::exists(dir / "manifest"));
    REQUIRE(fs::exists(dir / "trace.csv"));
    std::string trace1 = slurp(dir / "trace.csv");
    std::string manifest1 = slurp(dir / "manifest");
    CHECK(trace1.rfind("t,mean_v,firing_rate,n_spikes\n", 0) == 0);
    CHECK(manifest1.find("preset = cv_test") != std::string::npos);
    CHECK(manifest1.find("seed = 7") != std::string::npos);

    auto r2 = run_cli(args);
    REQUIRE(r2.exit_code == 0);
    CHECK(slurp(dir / "trace.csv") == trace1);
    CHECK(slurp(dir / "manifest") == manifest1);

    // the manifest itself re-parses as a config
    auto r3 = run_cli("simulate particle --config " + (dir / "manifest").string() +
                      " --dry-run");
    CHECK(r3.exit_code == 0);
}

TEST_CASE("meanfield run produces trace, step log and density snapshot") {
    fs::path dir = fresh_dir("meanfield");
    auto r = run_cli("simulate meanfield --preset hopf --T 0.5 "
                     "--v-min -5.5 --v-max 2.42 --w-min -1.275 --w-max 6.15 "
                     "--nv 100 --nw 100 --eps 0.001 --out " + dir.string());
    REQUIRE(r.exit_code == 0);
    CHECK(fs::exists(dir / "manifest"));
    CHECK(fs::exists(dir / "trace.csv"));
    CHECK(fs::exists(dir / "step_log.csv"));
    CHECK(fs::exists(dir / "density_final.bin"));
    CHECK(fs::exists(dir / "density_final.meta"));
    std::string log = slurp(dir / "step_log.csv");
    CHECK(log.rfind("t,dt,e,accepted,mass,min_mu,psi,mean_v\n", 0) == 0);
}

TEST_CASE("invalid grid via flags is a config error") {
    auto r = run_cli("simulate meanfield --preset hopf --nv 1 --nw 50 --dry-run");
    CHECK(r.exit_code == 2);
}
