#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(JAMLOC_CLI_PATH) + " " + args + " 2>cli_stderr.txt";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string dir_contents(const fs::path& dir) {
    std::string all;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) all += f.filename().string() + "\n" + slurp(f);
    return all;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
    CHECK(run("") == 2);
    CHECK(run("frobnicate") == 2);
    CHECK(run("estimate --method kalman .") == 2);
    CHECK(run("simulate --out sim_bad --alpha fixed:abc") == 2);
    CHECK(run("estimate does_not_exist") == 2);
}

TEST_CASE("simulate is deterministic") {
    fs::remove_all("sim_a");
    fs::remove_all("sim_b");
    REQUIRE(run("simulate --seed 7 --out sim_a") == 0);
    REQUIRE(run("simulate --seed 7 --out sim_b") == 0);
    CHECK(dir_contents("sim_a") == dir_contents("sim_b"));
    CHECK(fs::exists("sim_a/scenario.json"));
    CHECK(fs::exists("sim_a/receiver_7.csv"));
    REQUIRE(run("simulate --seed 8 --out sim_b") == 0);
    CHECK(dir_contents("sim_a") != dir_contents("sim_b"));
}

TEST_CASE("detect and estimate on a simulated scenario") {
    fs::remove_all("sim_e");
    REQUIRE(run("simulate --seed 3 --out sim_e") == 0);
    REQUIRE(run("detect sim_e --out sim_e_mask.csv") == 0);
    CHECK(slurp("sim_e_mask.csv").rfind("receiver_id,time_s,s_bar_dbhz,cnir_dbhz,detected\n", 0) == 0);
    for (const char* m : {"mean", "ls", "mle"}) {
        CAPTURE(m);
        const std::string out = std::string("est_") + m + ".json";
        REQUIRE(run(std::string("estimate sim_e --method ") + m + " --out " + out) == 0);
        const std::string text = slurp(out);
        CHECK(text.find("\"p0_hat\"") != std::string::npos);
        CHECK(text.find("\"error_3d_m\"") != std::string::npos);
    }
}

TEST_CASE("no detections exits with 1") {
    fs::remove_all("sim_quiet");
    std::ofstream("quiet.json") << R"({"version": 1, "scenario": {"excess_at_closest_db": null, "receivers": [{"sigma_db": 0.0}]}})";
    REQUIRE(run("simulate --config quiet.json --out sim_quiet") == 0);
    CHECK(run("estimate sim_quiet") == 1);
    CHECK(slurp("cli_stderr.txt").find("no jamming detected") != std::string::npos);
}

TEST_CASE("sweep writes all subset sizes") {
    fs::remove_all("sweep_out");
    REQUIRE(run("sweep --subset-min 4 --trials 1 --method mean --method ls --out sweep_out > /dev/null") == 0);
    std::istringstream csv(slurp("sweep_out/sweep.csv"));
    std::string line;
    std::getline(csv, line);
    std::map<std::string, std::string> runs;
    while (std::getline(csv, line)) {
        if (line.rfind("mean,", 0) != 0) continue;
        const auto size = line.substr(5, line.find(',', 5) - 5);
        runs[size] = line.substr(line.rfind(',') + 1);
    }
    CHECK(runs == std::map<std::string, std::string>{{"4", "70"}, {"5", "56"}, {"6", "28"}, {"7", "8"}, {"8", "1"}});
    CHECK(fs::exists("sweep_out/sweep.json"));
    const std::string first = slurp("sweep_out/sweep.json");
    REQUIRE(run("sweep --subset-min 4 --trials 1 --method mean --method ls --out sweep_out > /dev/null") == 0);
    CHECK(slurp("sweep_out/sweep.json") == first);
}

TEST_CASE("ingest a phone log") {
    fs::remove_all("ingested");
    const std::string log = std::string(JAMLOC_TEST_DATA) + "/sample_gnsslogger.txt";
    REQUIRE(run("ingest " + log + " --out ingested") == 0);
    CHECK(fs::exists("ingested/receiver_0.csv"));
    CHECK(slurp("cli_stderr.txt").find("sanity band") != std::string::npos);
    REQUIRE(run("detect ingested --out ingested_mask.csv") == 0);
}
