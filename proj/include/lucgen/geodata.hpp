#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lucgen/errors.hpp"

namespace lucgen::geo {

struct GeoPoint {
    double lat = 0.0;
    double lon = 0.0;
};

bool valid_point(const GeoPoint& p);

// Seconds since the Unix epoch, parsed from ISO-8601 "YYYY-MM-DDTHH:MM:SS"
// (a space separator is also accepted).
struct Timestamp {
    std::int64_t epoch_s = 0;
    std::int64_t day() const;  // civil day index (days since 1970-01-01)
};

std::optional<Timestamp> parse_timestamp(const std::string& s);
std::string format_timestamp(const Timestamp& t);
std::int64_t days_from_civil(int y, int m, int d);

struct PoiRecord {
    GeoPoint pos;
    int category = 0;
};

struct TripRecord {
    GeoPoint pickup, dropoff;
    Timestamp pickup_time, dropoff_time;
    double distance_m = 0.0;
    double duration_s = 0.0;
    double avg_kmh = 0.0;
};

struct FareRecord {
    GeoPoint board, alight;
    Timestamp board_time, alight_time;
    double balance = 0.0;
};

struct CheckInRecord {
    GeoPoint pos;
    Timestamp time;
};

struct PriceObservation {
    std::int64_t community_id = 0;
    int month = 0;  // 0 .. months-1
    double price = 0.0;
};

struct CommunitySite {
    std::int64_t id = 0;
    GeoPoint center;
};

// ---- frames ----------------------------------------------------------------

// Nine regions of a community frame: the central square plus eight context
// squares numbered row-major from the northwest:
//   C1=NW  C2=N  C3=NE
//   C4=W   (central)  C5=E
//   C6=SW  C7=S  C8=SE
enum class Region : int {
    Outside = -1,
    Center = 0,
    C1 = 1, C2 = 2, C3 = 3, C4 = 4, C5 = 5, C6 = 6, C7 = 7, C8 = 8,
};

constexpr int kContextCount = 8;

// Local equirectangular frame around a community center: x grows east and y
// grows north, in meters, with fixed meter-per-degree scales taken at the
// center latitude. Not valid near the poles (|lat| > 85 is rejected).
//
// Boundary convention: column intervals are half-open eastward [a, b) and row
// intervals half-open southward, i.e. a point on a shared edge belongs to the
// cell with the larger column/row index. Every point therefore maps to
// exactly one region.
struct AreaFrame {
    GeoPoint center;
    double side_m = 0.0;           // L, the side of each square
    double m_per_deg_lat = 0.0;
    double m_per_deg_lon = 0.0;

    void local(const GeoPoint& p, double& x, double& y) const;
    GeoPoint from_local(double x, double y) const;

    struct Box {
        double x_lo = 0.0, x_hi = 0.0;  // [x_lo, x_hi)
        double y_lo = 0.0, y_hi = 0.0;  // (y_lo, y_hi]
        bool contains(double x, double y) const {
            return x >= x_lo && x < x_hi && y > y_lo && y <= y_hi;
        }
    };

    Box central_box() const;
    Box context_box(int k) const;  // k in 1..8
    Box block_box() const;         // the whole 3L x 3L block

    // Lat/lon bounds of the full block (for spatial-index queries).
    void block_bounds(double& lat_lo, double& lat_hi, double& lon_lo, double& lon_hi) const;
};

AreaFrame make_frame(const CommunitySite& site, double side_m);
Region locate(const GeoPoint& p, const AreaFrame& frame);

// Cell of the n x n grid over the central square, as (row, col) with row 0 at
// the north edge and col 0 at the west edge. Empty when the point is not in
// the central square.
std::optional<std::pair<int, int>> grid_cell(const GeoPoint& p, const AreaFrame& frame, int n);

// ---- ingestion -------------------------------------------------------------

template <typename T>
struct IngestResult {
    std::vector<T> records;
    std::size_t rejected = 0;
};

// Readers validate the header, parse rows, and count (but skip) malformed or
// invariant-violating rows. A missing file or wrong header throws IngestError.
IngestResult<PoiRecord> ingest_pois(const std::string& path, int categories);
IngestResult<TripRecord> ingest_trips(const std::string& path);
IngestResult<FareRecord> ingest_fares(const std::string& path);
IngestResult<CheckInRecord> ingest_checkins(const std::string& path);
IngestResult<PriceObservation> ingest_prices(const std::string& path, int months);
IngestResult<CommunitySite> ingest_communities(const std::string& path);

void write_pois_csv(const std::string& path, const std::vector<PoiRecord>& rows);
void write_trips_csv(const std::string& path, const std::vector<TripRecord>& rows);
void write_fares_csv(const std::string& path, const std::vector<FareRecord>& rows);
void write_checkins_csv(const std::string& path, const std::vector<CheckInRecord>& rows);
void write_prices_csv(const std::string& path, const std::vector<PriceObservation>& rows);
void write_communities_csv(const std::string& path, const std::vector<CommunitySite>& rows);

} // namespace lucgen::geo
