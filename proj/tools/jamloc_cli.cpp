// jamloc command-line tool: simulate, detect, estimate, sweep, ingest.
#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <optional>
#include <string>
#include <vector>

#include "jamloc/baselines.hpp"
#include "jamloc/detect.hpp"
#include "jamloc/eval.hpp"
#include "jamloc/ingest.hpp"
#include "jamloc/io.hpp"
#include "jamloc/mle.hpp"
#include "jamloc/sim.hpp"

namespace fs = std::filesystem;
using namespace jamloc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitImpossible = 1;
constexpr int kExitUsage = 2;
constexpr int kExitInternal = 3;

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<double> gamma;
    std::string alpha;
};

io::Config load(const Common& c) {
    io::Config cfg = c.config_path.empty() ? io::Config{} : io::load_config(c.config_path);
    if (c.seed) {
        cfg.scenario.seed = *c.seed;
        cfg.mle.seed = *c.seed;
    }
    if (c.gamma) cfg.detection.gamma_db = *c.gamma;
    if (!c.alpha.empty()) {
        if (c.alpha == "random") {
            cfg.sweep.alpha.random = true;
        } else if (c.alpha.rfind("fixed:", 0) == 0) {
            std::size_t used = 0;
            const std::string v = c.alpha.substr(6);
            double a = 0.0;
            try {
                a = std::stod(v, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != v.size()) throw InvalidInput("--alpha expects fixed:<value> or random");
            cfg.sweep.alpha.random = false;
            cfg.sweep.alpha.fixed = a;
            for (auto& r : cfg.scenario.receivers) r.alpha = a;
        } else {
            throw InvalidInput("--alpha expects fixed:<value> or random");
        }
    }
    return cfg;
}

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config_path, "JSON configuration file")->check(CLI::ExistingFile);
    app->add_option("--seed", c.seed, "Seed for tracks, noise and multistarts");
    app->add_option("--gamma", c.gamma, "Detection threshold in dB (negative)");
}

std::ofstream open_out(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p);
    if (!out) throw InvalidInput("cannot write " + p.string());
    return out;
}

void emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty() || out_path == "-") {
        std::cout << text;
        return;
    }
    auto out = open_out(out_path);
    out << text;
}

detect::Observations observe_dir(const std::string& dir, const io::Config& cfg, io::ScenarioFiles& files) {
    files = io::read_scenario_dir(dir);
    return detect::observe(files.tracks, files.series, cfg.detection);
}

int cmd_simulate(const Common& c, const std::string& out, std::optional<std::uint64_t> noise_seed) {
    const io::Config cfg = load(c);
    sim::ScenarioSpec spec = cfg.scenario;
    const auto s = sim::simulate(spec, noise_seed);
    io::write_scenario_dir(out, spec, s);
    std::cerr << "wrote " << s.series.size() << " receivers to " << out << '\n';
    return kExitOk;
}

int cmd_detect(const Common& c, const std::string& in, const std::string& out) {
    const io::Config cfg = load(c);
    io::ScenarioFiles files;
    const auto obs = observe_dir(in, cfg, files);
    std::ostringstream csv;
    io::write_mask_csv(csv, obs);
    emit(out, csv.str());
    if (!obs.any_detected()) std::cerr << "note: no jamming detected\n";
    return kExitOk;
}

int cmd_estimate(const Common& c, const std::string& in, const std::string& out, const std::string& method_name,
                 std::optional<double> known_alpha) {
    io::Config cfg = load(c);
    if (known_alpha) cfg.mle.known_alpha = known_alpha;
    const eval::Method method = eval::parse_method(method_name);
    io::ScenarioFiles files;
    const auto obs = observe_dir(in, cfg, files);
    if (!obs.any_detected()) throw EstimationImpossible("no jamming detected");

    mle::EstimateReport report;
    switch (method) {
        case eval::Method::mle:
            report = mle::estimate(obs, cfg.mle);
            break;
        case eval::Method::mean:
            report = baselines::make_report(
                "mean", baselines::mean_position_estimate(obs.tracks, obs.masks, cfg.mean_weighting), obs);
            break;
        case eval::Method::ls: {
            if (!files.truth) {
                throw InvalidInput("least squares needs calibration; " + in + "/scenario.json has no truth section");
            }
            std::vector<baselines::LsCalibration> cal;
            for (const auto& t : files.truth->truth) {
                cal.push_back(baselines::calibration_from_truth(t, cfg.ls_calibration_distance));
            }
            report = baselines::make_report("ls", baselines::ls_estimate(obs, cal), obs);
            break;
        }
    }
    nlohmann::json j = io::to_json(report);
    if (files.truth) {
        const Position e = report.p0_hat - files.truth->jammer_position;
        j["error_3d_m"] = std::sqrt(e.x * e.x + e.y * e.y + e.z * e.z);
        j["error_horizontal_m"] = std::hypot(e.x, e.y);
    }
    emit(out, j.dump(2) + "\n");
    return kExitOk;
}

int cmd_sweep(const Common& c, const std::string& out, std::optional<std::size_t> subset_min,
              std::optional<std::size_t> trials, const std::vector<std::string>& methods,
              std::optional<unsigned> threads) {
    const io::Config cfg = load(c);
    eval::SweepSpec spec = cfg.sweep_spec();
    if (subset_min) spec.subset_min = *subset_min;
    if (trials) spec.trials = *trials;
    if (threads) spec.threads = *threads;
    if (!methods.empty()) {
        spec.methods.clear();
        for (const auto& m : methods) spec.methods.push_back(eval::parse_method(m));
    }
    const auto r = eval::run_sweep(spec);
    fs::create_directories(out);
    {
        auto f = open_out(fs::path(out) / "sweep.csv");
        io::write_sweep_csv(f, r);
    }
    {
        auto f = open_out(fs::path(out) / "sweep.json");
        f << io::to_json(r).dump(2) << '\n';
    }
    io::write_sweep_csv(std::cout, r);
    return kExitOk;
}

int cmd_ingest(const std::vector<std::string>& inputs, const std::string& out, const std::string& format,
               bool all_constellations, bool linear, const std::vector<double>& origin) {
    const ingest::LogFormat f = ingest::parse_format(format);
    ingest::ParseOptions opts;
    opts.gps_l1_only = !all_constellations;
    std::vector<std::vector<ingest::PhoneLogRecord>> logs;
    for (const auto& path : inputs) {
        std::ifstream in(path);
        if (!in) throw InvalidInput("cannot open " + path);
        auto parsed = ingest::parse_log(in, f, opts);
        for (const auto& d : parsed.diagnostics) std::cerr << path << ':' << d.line << ": " << d.message << '\n';
        logs.push_back(std::move(parsed.records));
    }
    std::optional<ingest::GeodeticFix> ref;
    if (!origin.empty()) {
        if (origin.size() != 3) throw InvalidInput("--origin expects lat lon alt");
        ref = ingest::GeodeticFix{origin[0], origin[1], origin[2]};
    }
    for (const auto& log : logs) {
        for (const auto& r : log) {
            if (!ref && r.fix) ref = r.fix;
        }
    }
    if (!ref) throw InvalidInput("no position fix in any input log");

    fs::create_directories(out);
    for (std::size_t i = 0; i < logs.size(); ++i) {
        const ReceiverId id{static_cast<std::uint32_t>(i)};
        const auto [track, series] = ingest::to_track_and_series(
            id, logs[i], *ref, linear ? ingest::AveragingDomain::linear : ingest::AveragingDomain::db);
        auto file = open_out(fs::path(out) / ("receiver_" + std::to_string(i) + ".csv"));
        io::write_receiver_csv(file, track, series);
        std::cerr << inputs[i] << " -> receiver_" << i << ".csv (" << track.size() << " epochs)\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"GNSS jammer localization from crowdsensed CNIR"};
    app.require_subcommand(1);

    Common common;
    std::string in;
    std::string out;

    auto* simulate = app.add_subcommand("simulate", "Synthesize a scenario directory");
    add_common(simulate, common);
    simulate->add_option("--alpha", common.alpha, "Pathloss exponent: fixed:<value>");
    std::optional<std::uint64_t> noise_seed;
    simulate->add_option("--noise-seed", noise_seed, "Separate seed for measurement noise");
    simulate->add_option("--out", out, "Output directory")->required();

    auto* detect_cmd = app.add_subcommand("detect", "Write the detection mask of a scenario directory");
    add_common(detect_cmd, common);
    detect_cmd->add_option("input", in, "Scenario directory")->required()->check(CLI::ExistingDirectory);
    detect_cmd->add_option("--out", out, "Mask CSV (default: stdout)");

    auto* estimate = app.add_subcommand("estimate", "Locate the jammer in a scenario directory");
    add_common(estimate, common);
    std::string method = "mle";
    std::optional<double> known_alpha;
    estimate->add_option("input", in, "Scenario directory")->required()->check(CLI::ExistingDirectory);
    estimate->add_option("--method", method, "mle, mean or ls")->check(CLI::IsMember({"mle", "mean", "ls"}));
    estimate->add_option("--known-alpha", known_alpha, "Use this pathloss exponent for every receiver");
    estimate->add_option("--out", out, "Report JSON (default: stdout)");

    auto* sweep = app.add_subcommand("sweep", "Monte Carlo sweep over receiver subsets");
    add_common(sweep, common);
    std::optional<std::size_t> subset_min;
    std::optional<std::size_t> trials;
    std::optional<unsigned> threads;
    std::vector<std::string> methods;
    sweep->add_option("--alpha", common.alpha, "fixed:<value> or random");
    sweep->add_option("--subset-min", subset_min, "Smallest subset size");
    sweep->add_option("--trials", trials, "Minimum runs per subset size");
    sweep->add_option("--method", methods, "Methods to run (repeatable)")->check(CLI::IsMember({"mle", "mean", "ls"}));
    sweep->add_option("--threads", threads, "Worker threads");
    sweep->add_option("--out", out, "Output directory for sweep.csv and sweep.json")->required();

    auto* ingest_cmd = app.add_subcommand("ingest", "Convert phone GNSS logs to receiver CSV files");
    std::vector<std::string> inputs;
    std::string format = "gnsslogger";
    bool all_constellations = false;
    bool linear = false;
    std::vector<double> origin;
    ingest_cmd->add_option("inputs", inputs, "Log files, one per receiver")->required()->check(CLI::ExistingFile);
    ingest_cmd->add_option("--format", format, "gnsslogger or flat")->check(CLI::IsMember({"gnsslogger", "flat"}));
    ingest_cmd->add_flag("--all-constellations", all_constellations, "Keep every constellation and band");
    ingest_cmd->add_flag("--linear", linear, "Average satellite CNIR in the linear domain");
    ingest_cmd->add_option("--origin", origin, "Local frame origin: lat lon alt")->expected(3);
    ingest_cmd->add_option("--out", out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*simulate) return cmd_simulate(common, out, noise_seed);
        if (*detect_cmd) return cmd_detect(common, in, out);
        if (*estimate) return cmd_estimate(common, in, out, method, known_alpha);
        if (*sweep) return cmd_sweep(common, out, subset_min, trials, methods, threads);
        if (*ingest_cmd) return cmd_ingest(inputs, out, format, all_constellations, linear, origin);
    } catch (const EstimationImpossible& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitImpossible;
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: malformed JSON: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kExitInternal;
    }
    return kExitUsage;
}
