#include "jamloc/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

namespace jamloc::io {
namespace {

using nlohmann::json;

json pos_json(const Position& p) { return json::array({p.x, p.y, p.z}); }

Position pos_from(const json& j) {
    if (!j.is_array() || j.size() != 3) throw InvalidInput("position must be a 3-element array");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json truth_json(const ReceiverTruth& t) {
    return {{"alpha", t.alpha}, {"eta", t.eta}, {"sigma_db", t.sigma_db}, {"s_bar_dbhz", t.s_bar_dbhz}};
}

ReceiverTruth truth_from(const json& j, ReceiverTruth t = {}) {
    t.alpha = j.value("alpha", t.alpha);
    t.eta = j.value("eta", t.eta);
    t.sigma_db = j.value("sigma_db", t.sigma_db);
    t.s_bar_dbhz = j.value("s_bar_dbhz", t.s_bar_dbhz);
    return t;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_from(const json& j, const char* key, std::optional<double> fallback) {
    if (!j.contains(key)) return fallback;
    if (j[key].is_null()) return std::nullopt;
    return j[key].get<double>();
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t c = line.find(',', start);
        out.push_back(line.substr(start, c == std::string_view::npos ? std::string_view::npos : c - start));
        if (c == std::string_view::npos) return out;
        start = c + 1;
    }
}

double parse_number(std::string_view s, std::size_t line) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
        throw InvalidInput("malformed number '" + std::string(s) + "' on line " + std::to_string(line));
    }
    return v;
}

json mle_json(const mle::MleConfig& m) {
    return {{"alpha_grid", {{"min", m.alpha_grid.min}, {"max", m.alpha_grid.max}, {"step", m.alpha_grid.step}}},
            {"alpha_select_threshold", m.alpha_select_threshold},
            {"initial_alpha", m.initial_alpha},
            {"known_alpha", optional_json(m.known_alpha)},
            {"max_iterations", m.max_iterations},
            {"gradient_tolerance", m.gradient_tolerance},
            {"armijo_c", m.armijo_c},
            {"backtrack_factor", m.backtrack_factor},
            {"multistart_count", m.multistart_count},
            {"refine_multistart_count", m.refine_multistart_count},
            {"seed", m.seed},
            {"sigma2_floor", m.sigma2_floor},
            {"bounds_inflation", m.bounds_inflation},
            {"low_information_tolerance", m.low_information_tolerance}};
}

mle::MleConfig mle_from(const json& j, mle::MleConfig m) {
    if (j.contains("alpha_grid")) {
        const json& g = j["alpha_grid"];
        m.alpha_grid = {g.value("min", m.alpha_grid.min), g.value("max", m.alpha_grid.max),
                        g.value("step", m.alpha_grid.step)};
    }
    m.alpha_select_threshold = j.value("alpha_select_threshold", m.alpha_select_threshold);
    m.initial_alpha = j.value("initial_alpha", m.initial_alpha);
    m.known_alpha = optional_from(j, "known_alpha", m.known_alpha);
    m.max_iterations = j.value("max_iterations", m.max_iterations);
    m.gradient_tolerance = j.value("gradient_tolerance", m.gradient_tolerance);
    m.armijo_c = j.value("armijo_c", m.armijo_c);
    m.backtrack_factor = j.value("backtrack_factor", m.backtrack_factor);
    m.multistart_count = j.value("multistart_count", m.multistart_count);
    m.refine_multistart_count = j.value("refine_multistart_count", m.refine_multistart_count);
    m.seed = j.value("seed", m.seed);
    m.sigma2_floor = j.value("sigma2_floor", m.sigma2_floor);
    m.bounds_inflation = j.value("bounds_inflation", m.bounds_inflation);
    m.low_information_tolerance = j.value("low_information_tolerance", m.low_information_tolerance);
    return m;
}

}  // namespace

std::string format_number(double v) {
    if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

json to_json(const sim::ScenarioSpec& s) {
    json receivers = json::array();
    for (const auto& r : s.receivers) receivers.push_back(truth_json(r));
    json segments = json::array();
    for (const auto& g : s.segments) {
        segments.push_back({{"start", pos_json(g.start)}, {"heading_rad", g.heading_rad}, {"climb_rad", g.climb_rad}});
    }
    return {{"receiver_count", s.receiver_count},
            {"area", {{"lo", pos_json(s.area.lo)}, {"hi", pos_json(s.area.hi)}}},
            {"speed_mps", s.speed_mps},
            {"startup_duration_s", s.startup_duration_s},
            {"jam_duration_s", s.jam_duration_s},
            {"sample_rate_hz", s.sample_rate_hz},
            {"jammer_position", pos_json(s.jammer_position)},
            {"receivers", receivers},
            {"excess_at_closest_db", optional_json(s.excess_at_closest_db)},
            {"segments", segments},
            {"seed", s.seed},
            {"saturation_floor_dbhz", s.saturation_floor_dbhz}};
}

sim::ScenarioSpec scenario_spec_from_json(const json& j, sim::ScenarioSpec s) {
    s.receiver_count = j.value("receiver_count", s.receiver_count);
    if (j.contains("area")) {
        s.area = Bounds{};
        s.area.extend(pos_from(j["area"].at("lo")));
        s.area.extend(pos_from(j["area"].at("hi")));
    }
    s.speed_mps = j.value("speed_mps", s.speed_mps);
    s.startup_duration_s = j.value("startup_duration_s", s.startup_duration_s);
    s.jam_duration_s = j.value("jam_duration_s", s.jam_duration_s);
    s.sample_rate_hz = j.value("sample_rate_hz", s.sample_rate_hz);
    if (j.contains("jammer_position")) s.jammer_position = pos_from(j["jammer_position"]);
    if (j.contains("receivers")) {
        s.receivers.clear();
        for (const auto& r : j["receivers"]) s.receivers.push_back(truth_from(r));
    }
    s.excess_at_closest_db = optional_from(j, "excess_at_closest_db", s.excess_at_closest_db);
    if (j.contains("segments")) {
        s.segments.clear();
        for (const auto& g : j["segments"]) {
            s.segments.push_back({pos_from(g.at("start")), g.value("heading_rad", 0.0), g.value("climb_rad", 0.0)});
        }
    }
    s.seed = j.value("seed", s.seed);
    s.saturation_floor_dbhz = j.value("saturation_floor_dbhz", s.saturation_floor_dbhz);
    return s;
}

eval::SweepSpec Config::sweep_spec() const {
    eval::SweepSpec s = sweep;
    s.base = scenario;
    s.detection = detection;
    s.mle = mle;
    s.ls_calibration_distance = ls_calibration_distance;
    s.mean_weighting = mean_weighting;
    return s;
}

json to_json(const Config& c) {
    json methods = json::array();
    for (auto m : c.sweep.methods) methods.push_back(std::string(eval::to_string(m)));
    return {{"version", kConfigVersion},
            {"scenario", to_json(c.scenario)},
            {"detection",
             {{"gamma_db", c.detection.gamma_db},
              {"baseline_window_s", c.detection.baseline_window_s},
              {"smoothing_window", c.detection.smoothing_window}}},
            {"mle", mle_json(c.mle)},
            {"baselines",
             {{"ls_calibration_distance", c.ls_calibration_distance},
              {"mean_weighting",
               c.mean_weighting == baselines::MeanWeighting::per_sample ? "per_sample" : "per_receiver"}}},
            {"sweep",
             {{"subset_min", c.sweep.subset_min},
              {"methods", methods},
              {"trials", c.sweep.trials},
              {"known_alpha", c.sweep.known_alpha},
              {"alpha",
               {{"policy", c.sweep.alpha.random ? "random" : "fixed"},
                {"fixed", c.sweep.alpha.fixed},
                {"choices", c.sweep.alpha.choices}}},
              {"regenerate_tracks", c.sweep.regenerate_tracks},
              {"threads", c.sweep.threads}}}};
}

Config config_from_json(const json& j) {
    Config c;
    if (j.value("version", kConfigVersion) != kConfigVersion) {
        throw InvalidInput("unsupported config version " + std::to_string(j.value("version", 0)));
    }
    if (j.contains("scenario")) c.scenario = scenario_spec_from_json(j["scenario"], c.scenario);
    if (j.contains("detection")) {
        const json& d = j["detection"];
        c.detection.gamma_db = d.value("gamma_db", c.detection.gamma_db);
        c.detection.baseline_window_s = d.value("baseline_window_s", c.detection.baseline_window_s);
        c.detection.smoothing_window = d.value("smoothing_window", c.detection.smoothing_window);
    }
    if (j.contains("mle")) c.mle = mle_from(j["mle"], c.mle);
    if (j.contains("baselines")) {
        const json& b = j["baselines"];
        c.ls_calibration_distance = b.value("ls_calibration_distance", c.ls_calibration_distance);
        const std::string w = b.value("mean_weighting", std::string("per_sample"));
        if (w != "per_sample" && w != "per_receiver") throw InvalidInput("mean_weighting must be per_sample or per_receiver");
        c.mean_weighting = w == "per_sample" ? baselines::MeanWeighting::per_sample : baselines::MeanWeighting::per_receiver;
    }
    if (j.contains("sweep")) {
        const json& s = j["sweep"];
        c.sweep.subset_min = s.value("subset_min", c.sweep.subset_min);
        if (s.contains("methods")) {
            c.sweep.methods.clear();
            for (const auto& m : s["methods"]) c.sweep.methods.push_back(eval::parse_method(m.get<std::string>()));
        }
        c.sweep.trials = s.value("trials", c.sweep.trials);
        c.sweep.known_alpha = s.value("known_alpha", c.sweep.known_alpha);
        if (s.contains("alpha")) {
            const json& a = s["alpha"];
            const std::string policy = a.value("policy", std::string("fixed"));
            if (policy != "fixed" && policy != "random") throw InvalidInput("alpha policy must be fixed or random");
            c.sweep.alpha.random = policy == "random";
            c.sweep.alpha.fixed = a.value("fixed", c.sweep.alpha.fixed);
            if (a.contains("choices")) c.sweep.alpha.choices = a["choices"].get<std::vector<double>>();
        }
        c.sweep.regenerate_tracks = s.value("regenerate_tracks", c.sweep.regenerate_tracks);
        c.sweep.threads = s.value("threads", c.sweep.threads);
    }
    return c;
}

Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open config " + path.string());
    try {
        return config_from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw InvalidInput("config " + path.string() + ": " + e.what());
    }
}

json to_json(const mle::EstimateReport& r) {
    json ids = json::array();
    json alpha = json::array();
    json eta = json::array();
    json sigma2 = json::array();
    for (const auto& re : r.receivers) {
        ids.push_back(re.id.value);
        alpha.push_back(number_or_null(re.alpha_hat));
        eta.push_back(number_or_null(re.eta_hat));
        sigma2.push_back(number_or_null(re.sigma2_hat));
    }
    json selected = json::array();
    for (const auto& id : r.selected_receivers) selected.push_back(id.value);
    return {{"method", r.method},
            {"p0_hat", pos_json(r.p0_hat)},
            {"converged", r.converged},
            {"failure", r.failure},
            {"selected_receivers", selected},
            {"receiver_ids", ids},
            {"alpha_hat", alpha},
            {"eta_hat", eta},
            {"sigma2_hat", sigma2},
            {"nll", number_or_null(r.nll)},
            {"iterations", r.iterations}};
}

json to_json(const eval::SweepResult& r) {
    json cells = json::array();
    for (const auto& c : r.cells) {
        json f = json::object();
        for (const auto& [k, v] : c.failures) f[k] = v;
        cells.push_back({{"method", std::string(eval::to_string(c.method))},
                         {"subset_size", c.subset_size},
                         {"median_m", c.stats ? json(c.stats->median) : json(nullptr)},
                         {"p25_m", c.stats ? json(c.stats->p25) : json(nullptr)},
                         {"p75_m", c.stats ? json(c.stats->p75) : json(nullptr)},
                         {"convergence_rate", c.convergence_rate},
                         {"n_runs", c.runs},
                         {"n_converged", c.converged},
                         {"failures", f}});
    }
    return {{"cells", cells}};
}

void write_receiver_csv(std::ostream& out, const ReceiverTrack& track, const CnirSeries& series) {
    if (!series.aligned_with(track)) throw InvalidInput("series not aligned with track");
    out << "time_s,x_m,y_m,z_m,cnir_dbhz,saturated\n";
    for (std::size_t n = 0; n < track.size(); ++n) {
        const auto& p = track[n].position;
        out << format_number(track[n].time) << ',' << format_number(p.x) << ',' << format_number(p.y) << ','
            << format_number(p.z) << ',' << (series[n].cnir_dbhz ? format_number(*series[n].cnir_dbhz) : "")
            << ',' << (series[n].saturated() ? 1 : 0) << '\n';
    }
}

std::pair<ReceiverTrack, CnirSeries> read_receiver_csv(std::istream& in, ReceiverId id) {
    std::string line;
    if (!std::getline(in, line)) throw InvalidInput("empty receiver CSV");
    std::vector<TrackSample> samples;
    std::vector<CnirSample> cnir;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto f = split(line);
        if (f.size() != 6) throw InvalidInput("expected 6 columns on line " + std::to_string(line_no));
        const double t = parse_number(f[0], line_no);
        samples.push_back({t, {parse_number(f[1], line_no), parse_number(f[2], line_no), parse_number(f[3], line_no)}});
        const bool saturated = parse_number(f[5], line_no) != 0.0;
        cnir.push_back({t, saturated ? std::nullopt : std::optional<double>(parse_number(f[4], line_no))});
    }
    ReceiverTrack track(id, std::move(samples));
    CnirSeries series(track, std::move(cnir));
    return {std::move(track), std::move(series)};
}

void write_scenario_dir(const std::filesystem::path& dir, const sim::ScenarioSpec& spec,
                        const sim::SimulatedScenario& sim) {
    std::filesystem::create_directories(dir);
    json receivers = json::array();
    for (std::size_t i = 0; i < sim.scenario.tracks.size(); ++i) {
        json t = truth_json(sim.scenario.truth[i]);
        t["id"] = sim.scenario.tracks[i].id().value;
        receivers.push_back(t);
    }
    const json doc{{"version", kConfigVersion},
                   {"spec", to_json(spec)},
                   {"truth",
                    {{"jammer_position", pos_json(sim.scenario.jammer_position)},
                     {"jam_start_time", sim.scenario.jam_start_time},
                     {"sample_rate_hz", sim.scenario.sample_rate_hz},
                     {"receivers", receivers}}}};
    {
        std::ofstream out(dir / "scenario.json");
        out << doc.dump(2) << '\n';
    }
    for (std::size_t i = 0; i < sim.series.size(); ++i) {
        std::ofstream out(dir / ("receiver_" + std::to_string(sim.scenario.tracks[i].id().value) + ".csv"));
        write_receiver_csv(out, sim.scenario.tracks[i], sim.series[i]);
    }
}

ScenarioFiles read_scenario_dir(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw InvalidInput("not a scenario directory: " + dir.string());
    const std::regex name("receiver_([0-9]+)\\.csv");
    std::vector<std::pair<std::uint32_t, std::filesystem::path>> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        std::smatch m;
        const std::string fname = entry.path().filename().string();
        if (std::regex_match(fname, m, name)) files.emplace_back(static_cast<std::uint32_t>(std::stoul(m[1])), entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw InvalidInput("no receiver_<id>.csv files in " + dir.string());

    ScenarioFiles out;
    for (const auto& [id, path] : files) {
        std::ifstream in(path);
        auto [track, series] = read_receiver_csv(in, ReceiverId{id});
        out.tracks.push_back(std::move(track));
        out.series.push_back(std::move(series));
    }
    const auto meta = dir / "scenario.json";
    if (std::filesystem::exists(meta)) {
        std::ifstream in(meta);
        const json doc = json::parse(in);
        if (doc.contains("truth")) {
            const json& t = doc["truth"];
            Scenario sc;
            sc.jammer_position = pos_from(t.at("jammer_position"));
            sc.jam_start_time = t.value("jam_start_time", 0.0);
            sc.sample_rate_hz = t.value("sample_rate_hz", 1.0);
            std::map<std::uint32_t, ReceiverTruth> by_id;
            for (const auto& r : t.at("receivers")) by_id[r.at("id").get<std::uint32_t>()] = truth_from(r);
            sc.tracks = out.tracks;
            for (const auto& tr : sc.tracks) {
                const auto it = by_id.find(tr.id().value);
                sc.truth.push_back(it != by_id.end() ? it->second : ReceiverTruth{});
            }
            out.truth = std::move(sc);
        }
    }
    return out;
}

void write_mask_csv(std::ostream& out, const detect::Observations& obs) {
    out << "receiver_id,time_s,s_bar_dbhz,cnir_dbhz,detected\n";
    for (std::size_t i = 0; i < obs.size(); ++i) {
        const auto& s = obs.series[i];
        for (std::size_t n = 0; n < s.size(); ++n) {
            out << s.id().value << ',' << format_number(s[n].time) << ',' << format_number(obs.baselines[i].s_bar_dbhz)
                << ',' << (s[n].cnir_dbhz ? format_number(*s[n].cnir_dbhz) : "") << ','
                << (obs.masks[i].detected[n] ? 1 : 0) << '\n';
        }
    }
}

void write_sweep_csv(std::ostream& out, const eval::SweepResult& r) {
    out << "method,subset_size,median_m,p25_m,p75_m,convergence_rate,n_runs\n";
    for (const auto& c : r.cells) {
        const double nan = std::nan("");
        out << eval::to_string(c.method) << ',' << c.subset_size << ','
            << format_number(c.stats ? c.stats->median : nan) << ',' << format_number(c.stats ? c.stats->p25 : nan)
            << ',' << format_number(c.stats ? c.stats->p75 : nan) << ',' << format_number(c.convergence_rate) << ','
            << c.runs << '\n';
    }
}

}  // namespace jamloc::io
