#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cstdlib>
#include <sys/wait.h>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "valor/config.hpp"
#include "valor/signal_io.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "valor_test_cli";

int run(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " " + std::string(VALOR_CLI_PATH) + " " + args + " > " + (kRoot / "stdout.txt").string() +
                            " 2> " + (kRoot / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

const char* const kSmall = "--set \"D=300 um^2/s\" --set \"r_v=5 um\" --set \"v_avg=2000 um/s\" "
                           "--set \"l=200 um\" --set \"w=1 um\" --set M=2000";

struct Workspace {
    Workspace() {
        fs::remove_all(kRoot);
        fs::create_directories(kRoot);
    }
    ~Workspace() { fs::remove_all(kRoot); }
};

}  // namespace

TEST_CASE("simulate then estimate", "[cli]") {
    Workspace ws;
    const fs::path out = kRoot / "sim";
    REQUIRE(run("--seed 4 --threads 2 --out-dir " + out.string() + " simulate --reps 2 " + kSmall) == 0);
    CHECK(fs::exists(out / "signal_rep0.csv"));
    CHECK(fs::exists(out / "signal_rep1.json"));
    CHECK(fs::exists(out / "manifest.json"));
    const auto manifest = valor::read_json_file((out / "manifest.json").string());
    CHECK(manifest.at("seed") == 4);
    CHECK(manifest.at("command").get<std::string>().find("simulate") != std::string::npos);

    const fs::path est = kRoot / "est";
    REQUIRE(run("--out-dir " + est.string() + " estimate " + (out / "signal_rep0.csv").string() + " " +
                (out / "signal_rep1.csv").string()) == 0);
    const std::string csv = slurp(est / "estimates.csv");
    CHECK(csv.find(valor::kEstimateCsvHeader) != std::string::npos);
    CHECK(csv.find("valor,200,") != std::string::npos);
    CHECK(csv.find("peak_time,200,") != std::string::npos);
    CHECK(slurp(kRoot / "stdout.txt").find("valor,200,") != std::string::npos);
}

TEST_CASE("simulate output does not depend on the thread count", "[cli]") {
    Workspace ws;
    REQUIRE(run("--seed 11 --threads 1 --out-dir " + (kRoot / "a").string() + " simulate --reps 2 " + kSmall) == 0);
    REQUIRE(run("--seed 11 --threads 3 --out-dir " + (kRoot / "b").string() + " simulate --reps 2 " + kSmall) == 0);
    for (const char* f : {"signal_rep0.csv", "signal_rep1.csv", "signal_rep0.json"}) {
        CHECK(slurp(kRoot / "a" / f) == slurp(kRoot / "b" / f));
    }
}

TEST_CASE("threads fall back to the environment", "[cli]") {
    Workspace ws;
    const fs::path out = kRoot / "env";
    REQUIRE(run("--seed 1 --out-dir " + out.string() + " simulate " + std::string(kSmall), "VALOR_THREADS=3") == 0);
    CHECK(valor::read_json_file((out / "manifest.json").string()).at("threads") == 3);
}

TEST_CASE("sweep writes points and estimates", "[cli]") {
    Workspace ws;
    const fs::path cfg = kRoot / "sweep.json";
    std::ofstream(cfg) << R"({
        "channel": {"D": "300 um^2/s", "r_v": "5 um", "v_avg": "2000 um/s", "l": "200 um", "w": "1 um"},
        "sim": {"M": 2000, "seed": 2},
        "sweep": {"axes": [{"name": "l", "values": ["100 um", "200 um", "300 um"]}],
                  "n_reps": 2, "metrics": ["variance", "l_hat_valor"]}
    })";
    const fs::path out = kRoot / "sweep";
    REQUIRE(run("--config " + cfg.string() + " --out-dir " + out.string() + " sweep") == 0);
    const std::string points = slurp(out / "sweep_points.csv");
    CHECK(points.starts_with("# units: um, s\n"));
    CHECK(std::count(points.begin(), points.end(), '\n') == 5);
    CHECK(fs::exists(out / "sweep_estimates.csv"));
    CHECK(fs::exists(out / "manifest.json"));
}

TEST_CASE("bad input exits with status 1", "[cli]") {
    Workspace ws;
    CHECK(run("simulate --set l=2") == 1);
    CHECK(slurp(kRoot / "stderr.txt").find("unit") != std::string::npos);
    const fs::path bad = kRoot / "bad.json";
    std::ofstream(bad) << R"({"channel": {"length": "2 um"}})";
    CHECK(run("--config " + bad.string() + " simulate") == 1);
    CHECK(run("reproduce fig9") != 0);
}
