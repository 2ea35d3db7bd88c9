/**
 * @file ingest.hpp
 * @brief Phone GNSS log ingestion (GnssLogger-style CSV) into core types.
 *
 * Two variants are understood:
 *  - `gnsslogger`: multi-record files where `# Raw,...` and `# Fix,...`
 *    comment lines declare the columns of subsequent `Raw,` and `Fix,`
 *    rows. Raw rows sharing a timestamp form one epoch.
 *  - `flat`: a plain CSV with a header row, one satellite per row.
 *
 * Column names are configurable through ColumnMapping.
 */
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "jamloc/core.hpp"

namespace jamloc::ingest {

enum class LogFormat { gnsslogger, flat };

[[nodiscard]] LogFormat parse_format(std::string_view id);

struct ColumnMapping {
    // gnsslogger Raw record
    std::string raw_time = "utcTimeMillis";
    std::string svid = "Svid";
    std::string cn0 = "Cn0DbHz";
    std::string constellation = "ConstellationType";
    std::string carrier = "CarrierFrequencyHz";
    std::string agc = "AgcDb";
    // gnsslogger Fix record
    std::string fix_time = "UnixTimeMillis";
    std::string latitude = "LatitudeDegrees";
    std::string longitude = "LongitudeDegrees";
    std::string altitude = "AltitudeMeters";
    // flat variant
    std::string flat_time = "time_s";
    std::string flat_svid = "svid";
    std::string flat_cn0 = "cn0_dbhz";
    std::string flat_constellation = "constellation";
    std::string flat_carrier = "carrier_hz";
    std::string flat_agc = "agc_db";
    std::string flat_latitude = "lat_deg";
    std::string flat_longitude = "lon_deg";
    std::string flat_altitude = "alt_m";
};

struct SatelliteObservation {
    int svid = 0;
    int constellation = 1;   ///< Android ConstellationType: 1 = GPS
    double carrier_hz = 0.0; ///< 0 when not reported
    double cn0_dbhz = 0.0;
    friend bool operator==(const SatelliteObservation&, const SatelliteObservation&) = default;
};

struct GeodeticFix {
    double latitude_deg = 0.0;
    double longitude_deg = 0.0;
    double altitude_m = 0.0;
    friend bool operator==(const GeodeticFix&, const GeodeticFix&) = default;
};

struct PhoneLogRecord {
    double timestamp_s = 0.0;
    std::optional<GeodeticFix> fix;
    std::vector<SatelliteObservation> satellites;
    std::optional<double> agc_db;
    friend bool operator==(const PhoneLogRecord&, const PhoneLogRecord&) = default;
};

struct ParseOptions {
    ColumnMapping columns;
    /// Keep only GPS L1 satellites; false keeps every constellation and band.
    bool gps_l1_only = true;
    double cn0_min_dbhz = 0.0;
    double cn0_max_dbhz = 65.0;
};

struct Diagnostic {
    std::size_t line = 0;
    std::string message;
};

struct ParseResult {
    std::vector<PhoneLogRecord> records;  ///< sorted by timestamp
    std::vector<Diagnostic> diagnostics;  ///< rejected rows
};

/// Throws InvalidInput when mandatory columns are missing or a timestamp
/// cannot be parsed; other bad rows are skipped and reported.
[[nodiscard]] ParseResult parse_log(std::istream& in, LogFormat format, const ParseOptions& options = {});

/// Writes records in the given variant; parse_log reads them back unchanged.
void write_log(std::ostream& out, const std::vector<PhoneLogRecord>& records, LogFormat format,
               const ColumnMapping& columns = {});

enum class AveragingDomain { db, linear };

/// Per-epoch mean of satellite CNIR; epochs with no satellites are SATURATED.
[[nodiscard]] CnirSeries average_satellites(ReceiverId id, const std::vector<PhoneLogRecord>& records,
                                            AveragingDomain domain = AveragingDomain::db);

using TimedValue = std::pair<double, double>;

/// Sliding median over an odd window, truncated at the edges.
[[nodiscard]] std::vector<TimedValue> smooth_agc(const std::vector<TimedValue>& series, std::size_t window);

/// AGC samples of the records that carry one.
[[nodiscard]] std::vector<TimedValue> agc_series(const std::vector<PhoneLogRecord>& records);

/// Flat-earth east/north/up offsets (meters) of `fix` from `origin`.
[[nodiscard]] Position to_local(const GeodeticFix& fix, const GeodeticFix& origin) noexcept;

/// Track and averaged series for one log, positions linearly interpolated
/// between fixes (held constant outside them). Throws InvalidInput with
/// fewer than one fix or fewer than two epochs.
[[nodiscard]] std::pair<ReceiverTrack, CnirSeries> to_track_and_series(
    ReceiverId id, const std::vector<PhoneLogRecord>& records, const GeodeticFix& origin,
    AveragingDomain domain = AveragingDomain::db);

}  // namespace jamloc::ingest
