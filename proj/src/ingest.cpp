#include "jamloc/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <string_view>
#include <unordered_map>

namespace jamloc::ingest {
namespace {

constexpr double kGpsL1Hz = 1575.42e6;
constexpr double kEarthRadius = 6371008.8;

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::optional<double> to_double(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::string fmt(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string fmt_millis(double t_s) {
    const double ms = t_s * 1000.0;
    const double rounded = std::round(ms);
    if (std::abs(ms - rounded) < 1e-3) return std::to_string(static_cast<long long>(rounded));
    return fmt(ms);
}

class Header {
public:
    Header() = default;
    explicit Header(const std::vector<std::string_view>& names) {
        for (std::size_t i = 0; i < names.size(); ++i) index_.emplace(std::string(trim(names[i])), i);
    }
    [[nodiscard]] std::optional<std::size_t> find(const std::string& name) const {
        const auto it = index_.find(name);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }
    [[nodiscard]] std::size_t require(const std::string& name, std::string_view record) const {
        const auto i = find(name);
        if (!i) throw InvalidInput("log header for " + std::string(record) + " lacks mandatory column '" + name + "'");
        return *i;
    }
    [[nodiscard]] bool empty() const noexcept { return index_.empty(); }

private:
    std::unordered_map<std::string, std::size_t> index_;
};

std::string_view field(const std::vector<std::string_view>& f, std::optional<std::size_t> i) {
    if (!i || *i >= f.size()) return {};
    return f[*i];
}

bool keep_satellite(const SatelliteObservation& s, const ParseOptions& o) {
    if (!o.gps_l1_only) return true;
    if (s.constellation != 1) return false;
    return s.carrier_hz == 0.0 || std::abs(s.carrier_hz - kGpsL1Hz) < 1e6;
}

struct EpochBuilder {
    std::map<double, PhoneLogRecord> epochs;
    std::vector<std::pair<double, GeodeticFix>> fixes;

    PhoneLogRecord& at(double t) {
        auto [it, inserted] = epochs.try_emplace(t);
        if (inserted) it->second.timestamp_s = t;
        return it->second;
    }

    std::vector<PhoneLogRecord> finish(double attach_tolerance) {
        for (const auto& [t, fix] : fixes) {
            auto it = epochs.lower_bound(t - attach_tolerance);
            PhoneLogRecord* best = nullptr;
            double best_dt = INFINITY;
            for (; it != epochs.end() && it->first <= t + attach_tolerance; ++it) {
                const double dt = std::abs(it->first - t);
                if (dt < best_dt && !it->second.fix) {
                    best_dt = dt;
                    best = &it->second;
                }
            }
            if (best == nullptr) best = &at(t);
            best->fix = fix;
        }
        std::vector<PhoneLogRecord> out;
        out.reserve(epochs.size());
        for (auto& [t, r] : epochs) out.push_back(std::move(r));
        return out;
    }
};

// Parses one satellite; returns false with a message on rejection.
bool read_satellite(std::string_view svid, std::string_view cn0, std::string_view constellation,
                    std::string_view carrier, const ParseOptions& o, SatelliteObservation& sat, std::string& why) {
    const auto c = to_double(cn0);
    const auto sv = to_double(svid);
    if (!c || !sv) {
        why = "unparseable Svid or CNIR";
        return false;
    }
    if (*c < o.cn0_min_dbhz || *c > o.cn0_max_dbhz) {
        why = "CNIR " + fmt(*c) + " dB-Hz outside sanity band [" + fmt(o.cn0_min_dbhz) + ", " +
              fmt(o.cn0_max_dbhz) + "]";
        return false;
    }
    sat.svid = static_cast<int>(*sv);
    sat.cn0_dbhz = *c;
    sat.constellation = static_cast<int>(to_double(constellation).value_or(1.0));
    sat.carrier_hz = to_double(carrier).value_or(0.0);
    return true;
}

ParseResult parse_gnsslogger(std::istream& in, const ParseOptions& o) {
    const ColumnMapping& cm = o.columns;
    Header raw;
    Header fix;
    ParseResult result;
    EpochBuilder builder;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = trim(line);
        if (view.empty()) continue;
        if (view.front() == '#') {
            view.remove_prefix(1);
            view = trim(view);
            const auto f = split(view);
            if (!f.empty() && trim(f[0]) == "Raw") raw = Header(f);
            if (!f.empty() && trim(f[0]) == "Fix") fix = Header(f);
            continue;
        }
        const auto f = split(view);
        const std::string_view kind = trim(f[0]);
        if (kind == "Raw") {
            if (raw.empty()) throw InvalidInput("Raw row before any '# Raw,' header (line " + std::to_string(line_no) + ")");
            const auto t = to_double(field(f, raw.require(cm.raw_time, "Raw")));
            if (!t) throw InvalidInput("unparseable timestamp on line " + std::to_string(line_no));
            PhoneLogRecord& rec = builder.at(*t / 1000.0);
            SatelliteObservation sat;
            std::string why;
            if (!read_satellite(field(f, raw.require(cm.svid, "Raw")), field(f, raw.require(cm.cn0, "Raw")),
                                field(f, raw.find(cm.constellation)), field(f, raw.find(cm.carrier)), o, sat, why)) {
                result.diagnostics.push_back({line_no, why});
                continue;
            }
            if (!rec.agc_db) rec.agc_db = to_double(field(f, raw.find(cm.agc)));
            if (keep_satellite(sat, o)) rec.satellites.push_back(sat);
        } else if (kind == "Fix") {
            if (fix.empty()) continue;
            const auto t = to_double(field(f, fix.require(cm.fix_time, "Fix")));
            if (!t) throw InvalidInput("unparseable timestamp on line " + std::to_string(line_no));
            const auto lat = to_double(field(f, fix.require(cm.latitude, "Fix")));
            const auto lon = to_double(field(f, fix.require(cm.longitude, "Fix")));
            const auto alt = to_double(field(f, fix.find(cm.altitude)));
            if (!lat || !lon) {
                result.diagnostics.push_back({line_no, "unparseable fix coordinates"});
                continue;
            }
            builder.fixes.push_back({*t / 1000.0, GeodeticFix{*lat, *lon, alt.value_or(0.0)}});
        }
    }
    if (raw.empty()) throw InvalidInput("log lacks a '# Raw,' header line");
    result.records = builder.finish(0.5);
    return result;
}

ParseResult parse_flat(std::istream& in, const ParseOptions& o) {
    const ColumnMapping& cm = o.columns;
    Header header;
    ParseResult result;
    EpochBuilder builder;
    std::string line;
    std::size_t line_no = 0;
    std::size_t time_col = 0;
    std::size_t cn0_col = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view view = trim(line);
        if (view.empty() || view.front() == '#') continue;
        const auto f = split(view);
        if (header.empty()) {
            header = Header(f);
            time_col = header.require(cm.flat_time, "flat log");
            cn0_col = header.require(cm.flat_cn0, "flat log");
            continue;
        }
        const auto t = to_double(field(f, time_col));
        if (!t) throw InvalidInput("unparseable timestamp on line " + std::to_string(line_no));
        PhoneLogRecord& rec = builder.at(*t);
        const auto lat = to_double(field(f, header.find(cm.flat_latitude)));
        const auto lon = to_double(field(f, header.find(cm.flat_longitude)));
        if (lat && lon && !rec.fix) {
            rec.fix = GeodeticFix{*lat, *lon, to_double(field(f, header.find(cm.flat_altitude))).value_or(0.0)};
        }
        if (!rec.agc_db) rec.agc_db = to_double(field(f, header.find(cm.flat_agc)));
        const std::string_view cn0 = trim(field(f, cn0_col));
        if (cn0.empty()) continue;  // epoch without satellite output
        SatelliteObservation sat;
        std::string why;
        if (!read_satellite(field(f, header.find(cm.flat_svid)), cn0, field(f, header.find(cm.flat_constellation)),
                            field(f, header.find(cm.flat_carrier)), o, sat, why)) {
            result.diagnostics.push_back({line_no, why});
            continue;
        }
        if (keep_satellite(sat, o)) rec.satellites.push_back(sat);
    }
    if (header.empty()) throw InvalidInput("flat log lacks a header row");
    result.records = builder.finish(0.0);
    return result;
}

}  // namespace

LogFormat parse_format(std::string_view id) {
    if (id == "gnsslogger") return LogFormat::gnsslogger;
    if (id == "flat") return LogFormat::flat;
    throw InvalidInput("unknown log format '" + std::string(id) + "' (expected gnsslogger or flat)");
}

ParseResult parse_log(std::istream& in, LogFormat format, const ParseOptions& options) {
    return format == LogFormat::gnsslogger ? parse_gnsslogger(in, options) : parse_flat(in, options);
}

void write_log(std::ostream& out, const std::vector<PhoneLogRecord>& records, LogFormat format,
               const ColumnMapping& cm) {
    auto opt = [](const std::optional<double>& v) { return v ? fmt(*v) : std::string(); };
    if (format == LogFormat::gnsslogger) {
        out << "# " << "Raw," << cm.raw_time << ',' << cm.svid << ',' << cm.cn0 << ',' << cm.constellation << ','
            << cm.carrier << ',' << cm.agc << '\n';
        out << "# " << "Fix,Provider," << cm.latitude << ',' << cm.longitude << ',' << cm.altitude << ','
            << cm.fix_time << '\n';
        for (const auto& r : records) {
            const std::string t = fmt_millis(r.timestamp_s);
            if (r.fix) {
                out << "Fix,gps," << fmt(r.fix->latitude_deg) << ',' << fmt(r.fix->longitude_deg) << ','
                    << fmt(r.fix->altitude_m) << ',' << t << '\n';
            }
            for (const auto& s : r.satellites) {
                out << "Raw," << t << ',' << s.svid << ',' << fmt(s.cn0_dbhz) << ',' << s.constellation << ','
                    << fmt(s.carrier_hz) << ',' << opt(r.agc_db) << '\n';
            }
        }
        return;
    }
    out << cm.flat_time << ',' << cm.flat_svid << ',' << cm.flat_cn0 << ',' << cm.flat_constellation << ','
        << cm.flat_carrier << ',' << cm.flat_agc << ',' << cm.flat_latitude << ',' << cm.flat_longitude << ','
        << cm.flat_altitude << '\n';
    for (const auto& r : records) {
        std::string tail = "," + opt(r.agc_db) + ",";
        if (r.fix) {
            tail += fmt(r.fix->latitude_deg) + ',' + fmt(r.fix->longitude_deg) + ',' + fmt(r.fix->altitude_m);
        } else {
            tail += ",,";
        }
        if (r.satellites.empty()) {
            out << fmt(r.timestamp_s) << ",,,," << tail << '\n';
            continue;
        }
        for (const auto& s : r.satellites) {
            out << fmt(r.timestamp_s) << ',' << s.svid << ',' << fmt(s.cn0_dbhz) << ',' << s.constellation << ','
                << fmt(s.carrier_hz) << tail << '\n';
        }
    }
}

CnirSeries average_satellites(ReceiverId id, const std::vector<PhoneLogRecord>& records, AveragingDomain domain) {
    std::vector<CnirSample> samples;
    samples.reserve(records.size());
    for (const auto& r : records) {
        if (r.satellites.empty()) {
            samples.push_back({r.timestamp_s, std::nullopt});
            continue;
        }
        double sum = 0.0;
        for (const auto& s : r.satellites) {
            sum += domain == AveragingDomain::db ? s.cn0_dbhz : std::pow(10.0, s.cn0_dbhz / 10.0);
        }
        const double mean = sum / static_cast<double>(r.satellites.size());
        samples.push_back({r.timestamp_s, domain == AveragingDomain::db ? mean : 10.0 * std::log10(mean)});
    }
    return CnirSeries(id, std::move(samples));
}

std::vector<TimedValue> smooth_agc(const std::vector<TimedValue>& series, std::size_t window) {
    if (window == 0 || window % 2 == 0) throw InvalidInput("median window must be odd and >= 1");
    const std::size_t half = window / 2;
    std::vector<TimedValue> out;
    out.reserve(series.size());
    std::vector<double> buf;
    for (std::size_t n = 0; n < series.size(); ++n) {
        const std::size_t lo = n >= half ? n - half : 0;
        const std::size_t hi = std::min(series.size() - 1, n + half);
        buf.clear();
        for (std::size_t k = lo; k <= hi; ++k) buf.push_back(series[k].second);
        std::sort(buf.begin(), buf.end());
        const std::size_t m = buf.size() / 2;
        const double med = buf.size() % 2 == 1 ? buf[m] : 0.5 * (buf[m - 1] + buf[m]);
        out.emplace_back(series[n].first, med);
    }
    return out;
}

std::vector<TimedValue> agc_series(const std::vector<PhoneLogRecord>& records) {
    std::vector<TimedValue> out;
    for (const auto& r : records) {
        if (r.agc_db) out.emplace_back(r.timestamp_s, *r.agc_db);
    }
    return out;
}

Position to_local(const GeodeticFix& fix, const GeodeticFix& origin) noexcept {
    constexpr double deg = std::numbers::pi / 180.0;
    const double east = (fix.longitude_deg - origin.longitude_deg) * deg * kEarthRadius *
                        std::cos(origin.latitude_deg * deg);
    const double north = (fix.latitude_deg - origin.latitude_deg) * deg * kEarthRadius;
    return {east, north, fix.altitude_m - origin.altitude_m};
}

std::pair<ReceiverTrack, CnirSeries> to_track_and_series(ReceiverId id, const std::vector<PhoneLogRecord>& records,
                                                         const GeodeticFix& origin, AveragingDomain domain) {
    std::vector<std::pair<double, Position>> fixes;
    for (const auto& r : records) {
        if (r.fix) fixes.emplace_back(r.timestamp_s, to_local(*r.fix, origin));
    }
    if (fixes.empty()) throw InvalidInput("log has no position fixes");
    std::vector<TrackSample> samples;
    samples.reserve(records.size());
    std::size_t k = 0;
    for (const auto& r : records) {
        const double t = r.timestamp_s;
        while (k + 1 < fixes.size() && fixes[k + 1].first <= t) ++k;
        Position p;
        if (t <= fixes.front().first) {
            p = fixes.front().second;
        } else if (k + 1 >= fixes.size()) {
            p = fixes.back().second;
        } else {
            const auto& [t0, p0] = fixes[k];
            const auto& [t1, p1] = fixes[k + 1];
            const double w = (t - t0) / (t1 - t0);
            p = p0 + w * (p1 - p0);
        }
        samples.push_back({t, p});
    }
    ReceiverTrack track(id, std::move(samples));
    CnirSeries series(track, average_satellites(id, records, domain).samples());
    return {std::move(track), std::move(series)};
}

}  // namespace jamloc::ingest
