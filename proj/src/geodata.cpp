#include "lucgen/geodata.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>

#include "lucgen/csv.hpp"

namespace lucgen::csv {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

Reader::Reader(const std::string& path, const std::string& expected_header)
    : in_(path), path_(path) {
    if (!in_) throw IngestError("cannot open " + path);
    std::string header;
    if (!std::getline(in_, header)) throw IngestError(path + ": empty file, expected a header");
    if (!header.empty() && header.back() == '\r') header.pop_back();
    if (header != expected_header)
        throw IngestError(path + ": unexpected header '" + header + "' (want '" +
                          expected_header + "')");
}

bool Reader::next(std::vector<std::string>& fields) {
    std::string line;
    while (std::getline(in_, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        fields = split_fields(line);
        return true;
    }
    return false;
}

Writer::Writer(const std::string& path, const std::string& header)
    : out_(path, std::ios::binary), path_(path) {
    if (!out_) throw IngestError("cannot open " + path + " for writing");
    out_ << header << '\n';
}

void Writer::row(const std::string& line) { out_ << line << '\n'; }

Writer::~Writer() = default;

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* begin = s.c_str();
    char* end = nullptr;
    out = std::strtod(begin, &end);
    return end == begin + s.size() && std::isfinite(out);
}

bool parse_int64(const std::string& s, long long& out) {
    if (s.empty()) return false;
    const char* begin = s.c_str();
    char* end = nullptr;
    out = std::strtoll(begin, &end, 10);
    return end == begin + s.size();
}

std::string fmt_exact(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

} // namespace lucgen::csv

namespace lucgen::geo {

namespace {

constexpr double kMetersPerDegLat = 111320.0;
constexpr double kMaxFrameLat = 85.0;

bool civil_valid(int y, int m, int d) {
    if (y < 1 || m < 1 || m > 12 || d < 1) return false;
    static const int len[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    int dim = len[m - 1];
    const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
    if (m == 2 && leap) dim = 29;
    return d <= dim;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
    y = static_cast<int>(yy + (m <= 2));
}

} // namespace

bool valid_point(const GeoPoint& p) {
    return std::isfinite(p.lat) && std::isfinite(p.lon) &&
           p.lat >= -90.0 && p.lat <= 90.0 && p.lon >= -180.0 && p.lon <= 180.0;
}

std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                         static_cast<unsigned>(d) - 1u;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

std::int64_t Timestamp::day() const {
    std::int64_t d = epoch_s / 86400;
    if (epoch_s < 0 && epoch_s % 86400 != 0) --d;
    return d;
}

std::optional<Timestamp> parse_timestamp(const std::string& s) {
    if (s.size() != 19) return std::nullopt;
    if (s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') ||
        s[13] != ':' || s[16] != ':')
        return std::nullopt;
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u, 11u, 12u, 14u, 15u, 17u, 18u})
        if (s[i] < '0' || s[i] > '9') return std::nullopt;
    auto num = [&](std::size_t pos, std::size_t len) {
        int v = 0;
        for (std::size_t i = 0; i < len; ++i) v = v * 10 + (s[pos + i] - '0');
        return v;
    };
    const int y = num(0, 4), mo = num(5, 2), d = num(8, 2);
    const int hh = num(11, 2), mi = num(14, 2), ss = num(17, 2);
    if (!civil_valid(y, mo, d) || hh > 23 || mi > 59 || ss > 59) return std::nullopt;
    Timestamp t;
    t.epoch_s = days_from_civil(y, mo, d) * 86400 + hh * 3600 + mi * 60 + ss;
    return t;
}

std::string format_timestamp(const Timestamp& t) {
    const std::int64_t day = t.day();
    std::int64_t rem = t.epoch_s - day * 86400;
    int y, m, d;
    civil_from_days(day, y, m, d);
    char buf[24];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d", y, m, d,
                  static_cast<int>(rem / 3600), static_cast<int>(rem / 60 % 60),
                  static_cast<int>(rem % 60));
    return buf;
}

// ---- frames ----------------------------------------------------------------

void AreaFrame::local(const GeoPoint& p, double& x, double& y) const {
    x = (p.lon - center.lon) * m_per_deg_lon;
    y = (p.lat - center.lat) * m_per_deg_lat;
}

GeoPoint AreaFrame::from_local(double x, double y) const {
    return {center.lat + y / m_per_deg_lat, center.lon + x / m_per_deg_lon};
}

AreaFrame::Box AreaFrame::central_box() const {
    const double h = side_m / 2.0;
    return {-h, h, -h, h};
}

AreaFrame::Box AreaFrame::context_box(int k) const {
    if (k < 1 || k > kContextCount) throw PreconditionError("context index must be 1..8");
    // Row-major NW..SE with the center skipped.
    static const int col_of[8] = {0, 1, 2, 0, 2, 0, 1, 2};
    static const int row_of[8] = {0, 0, 0, 1, 1, 2, 2, 2};
    const double L = side_m;
    const int col = col_of[k - 1];
    const int row = row_of[k - 1];
    Box b;
    b.x_lo = -1.5 * L + col * L;
    b.x_hi = b.x_lo + L;
    b.y_hi = 1.5 * L - row * L;
    b.y_lo = b.y_hi - L;
    return b;
}

AreaFrame::Box AreaFrame::block_box() const {
    const double h = 1.5 * side_m;
    return {-h, h, -h, h};
}

void AreaFrame::block_bounds(double& lat_lo, double& lat_hi,
                             double& lon_lo, double& lon_hi) const {
    const double h = 1.5 * side_m;
    lat_lo = center.lat - h / m_per_deg_lat;
    lat_hi = center.lat + h / m_per_deg_lat;
    lon_lo = center.lon - h / m_per_deg_lon;
    lon_hi = center.lon + h / m_per_deg_lon;
}

AreaFrame make_frame(const CommunitySite& site, double side_m) {
    if (!valid_point(site.center)) throw DomainError("frame center is not a valid point");
    if (std::fabs(site.center.lat) > kMaxFrameLat)
        throw DomainError("frame center above 85 degrees latitude: equirectangular "
                          "approximation unsupported there");
    if (!(side_m > 0.0)) throw PreconditionError("frame side must be positive");
    AreaFrame f;
    f.center = site.center;
    f.side_m = side_m;
    f.m_per_deg_lat = kMetersPerDegLat;
    f.m_per_deg_lon = kMetersPerDegLat * std::cos(site.center.lat * std::numbers::pi / 180.0);
    return f;
}

Region locate(const GeoPoint& p, const AreaFrame& frame) {
    double x, y;
    frame.local(p, x, y);
    const double L = frame.side_m;
    const double h = 1.5 * L;
    // Columns half-open eastward, rows half-open southward.
    if (x < -h || x >= h || y <= -h || y > h) return Region::Outside;
    const int col = static_cast<int>(std::floor((x + h) / L));
    const int row = static_cast<int>(std::floor((h - y) / L));
    // y == h gives row 0; y just above -h gives row 2. Guard the floor edges.
    const int r = std::min(std::max(row, 0), 2);
    const int c = std::min(std::max(col, 0), 2);
    if (r == 1 && c == 1) return Region::Center;
    static const Region by_cell[3][3] = {
        {Region::C1, Region::C2, Region::C3},
        {Region::C4, Region::Center, Region::C5},
        {Region::C6, Region::C7, Region::C8},
    };
    return by_cell[r][c];
}

std::optional<std::pair<int, int>> grid_cell(const GeoPoint& p, const AreaFrame& frame, int n) {
    if (n < 1) throw PreconditionError("grid resolution must be at least 1");
    double x, y;
    frame.local(p, x, y);
    const double h = frame.side_m / 2.0;
    if (x < -h || x >= h || y <= -h || y > h) return std::nullopt;
    const double cell = frame.side_m / static_cast<double>(n);
    int col = static_cast<int>(std::floor((x + h) / cell));
    int row = static_cast<int>(std::floor((h - y) / cell));
    col = std::min(std::max(col, 0), n - 1);
    row = std::min(std::max(row, 0), n - 1);
    return std::make_pair(row, col);
}

// ---- ingestion -------------------------------------------------------------

namespace {

bool parse_point(const std::string& lat_s, const std::string& lon_s, GeoPoint& p) {
    return csv::parse_double(lat_s, p.lat) && csv::parse_double(lon_s, p.lon) &&
           valid_point(p);
}

} // namespace

IngestResult<PoiRecord> ingest_pois(const std::string& path, int categories) {
    csv::Reader reader(path, "lat,lon,category");
    IngestResult<PoiRecord> out;
    std::vector<std::string> f;
    while (reader.next(f)) {
        PoiRecord r;
        long long cat = 0;
        if (f.size() == 3 && parse_point(f[0], f[1], r.pos) && csv::parse_int64(f[2], cat) &&
            cat >= 0 && cat < categories) {
            r.category = static_cast<int>(cat);
            out.records.push_back(r);
        } else {
            ++out.rejected;
        }
    }
    return out;
}

IngestResult<TripRecord> ingest_trips(const std::string& path) {
    csv::Reader reader(path, "plat,plon,ptime,dlat,dlon,dtime,distance_m,duration_s,avg_kmh");
    IngestResult<TripRecord> out;
    std::vector<std::string> f;
    while (reader.next(f)) {
        TripRecord r;
        if (f.size() != 9 || !parse_point(f[0], f[1], r.pickup) ||
            !parse_point(f[3], f[4], r.dropoff)) {
            ++out.rejected;
            continue;
        }
        const auto pt = parse_timestamp(f[2]);
        const auto dt = parse_timestamp(f[5]);
        if (!pt || !dt || !csv::parse_double(f[6], r.distance_m) ||
            !csv::parse_double(f[7], r.duration_s) || !csv::parse_double(f[8], r.avg_kmh) ||
            !(r.distance_m > 0.0) || !(r.duration_s > 0.0) || !(r.avg_kmh > 0.0)) {
            ++out.rejected;
            continue;
        }
        r.pickup_time = *pt;
        r.dropoff_time = *dt;
        out.records.push_back(r);
    }
    return out;
}

IngestResult<FareRecord> ingest_fares(const std::string& path) {
    csv::Reader reader(path, "blat,blon,btime,alat,alon,atime,balance");
    IngestResult<FareRecord> out;
    std::vector<std::string> f;
    while (reader.next(f)) {
        FareRecord r;
        if (f.size() != 7 || !parse_point(f[0], f[1], r.board) ||
            !parse_point(f[3], f[4], r.alight)) {
            ++out.rejected;
            continue;
        }
        const auto bt = parse_timestamp(f[2]);
        const auto at = parse_timestamp(f[5]);
        if (!bt || !at || !csv::parse_double(f[6], r.balance) || r.balance < 0.0) {
            ++out.rejected;
            continue;
        }
        r.board_time = *bt;
        r.alight_time = *at;
        out.records.push_back(r);
    }
    return out;
}

IngestResult<CheckInRecord> ingest_checkins(const std::string& path) {
    csv::Reader reader(path, "lat,lon,time");
    IngestResult<CheckInRecord> out;
    std::vector<std::string> f;
    while (reader.next(f)) {
        CheckInRecord r;
        std::optional<Timestamp> t;
        if (f.size() == 3 && parse_point(f[0], f[1], r.pos) && (t = parse_timestamp(f[2]))) {
            r.time = *t;
            out.records.push_back(r);
        } else {
            ++out.rejected;
        }
    }
    return out;
}

IngestResult<PriceObservation> ingest_prices(const std::string& path, int months) {
    csv::Reader reader(path, "community_id,month,price");
    IngestResult<PriceObservation> out;
    std::vector<std::string> f;
    while (reader.next(f)) {
        PriceObservation r;
        long long id = 0, month = 0;
        if (f.size() == 3 && csv::parse_int64(f[0], id) && csv::parse_int64(f[1], month) &&
            csv::parse_double(f[2], r.price) && id >= 0 && month >= 0 && month < months &&
            r.price > 0.0) {
            r.community_id = id;
            r.month = static_cast<int>(month);
            out.records.push_back(r);
        } else {
            ++out.rejected;
        }
    }
    return out;
}

IngestResult<CommunitySite> ingest_communities(const std::string& path) {
    csv::Reader reader(path, "id,lat,lon");
    IngestResult<CommunitySite> out;
    std::set<long long> seen;
    std::vector<std::string> f;
    while (reader.next(f)) {
        CommunitySite r;
        long long id = 0;
        if (f.size() == 3 && csv::parse_int64(f[0], id) && id >= 0 &&
            parse_point(f[1], f[2], r.center) && seen.insert(id).second) {
            r.id = id;
            out.records.push_back(r);
        } else {
            ++out.rejected;
        }
    }
    return out;
}

// ---- writers ---------------------------------------------------------------

void write_pois_csv(const std::string& path, const std::vector<PoiRecord>& rows) {
    csv::Writer w(path, "lat,lon,category");
    for (const auto& r : rows)
        w.row(csv::fmt_fixed(r.pos.lat, 8) + "," + csv::fmt_fixed(r.pos.lon, 8) + "," +
              std::to_string(r.category));
}

void write_trips_csv(const std::string& path, const std::vector<TripRecord>& rows) {
    csv::Writer w(path, "plat,plon,ptime,dlat,dlon,dtime,distance_m,duration_s,avg_kmh");
    for (const auto& r : rows)
        w.row(csv::fmt_fixed(r.pickup.lat, 8) + "," + csv::fmt_fixed(r.pickup.lon, 8) + "," +
              format_timestamp(r.pickup_time) + "," + csv::fmt_fixed(r.dropoff.lat, 8) + "," +
              csv::fmt_fixed(r.dropoff.lon, 8) + "," + format_timestamp(r.dropoff_time) + "," +
              csv::fmt_fixed(r.distance_m, 3) + "," + csv::fmt_fixed(r.duration_s, 3) + "," +
              csv::fmt_fixed(r.avg_kmh, 3));
}

void write_fares_csv(const std::string& path, const std::vector<FareRecord>& rows) {
    csv::Writer w(path, "blat,blon,btime,alat,alon,atime,balance");
    for (const auto& r : rows)
        w.row(csv::fmt_fixed(r.board.lat, 8) + "," + csv::fmt_fixed(r.board.lon, 8) + "," +
              format_timestamp(r.board_time) + "," + csv::fmt_fixed(r.alight.lat, 8) + "," +
              csv::fmt_fixed(r.alight.lon, 8) + "," + format_timestamp(r.alight_time) + "," +
              csv::fmt_fixed(r.balance, 2));
}

void write_checkins_csv(const std::string& path, const std::vector<CheckInRecord>& rows) {
    csv::Writer w(path, "lat,lon,time");
    for (const auto& r : rows)
        w.row(csv::fmt_fixed(r.pos.lat, 8) + "," + csv::fmt_fixed(r.pos.lon, 8) + "," +
              format_timestamp(r.time));
}

void write_prices_csv(const std::string& path, const std::vector<PriceObservation>& rows) {
    csv::Writer w(path, "community_id,month,price");
    for (const auto& r : rows)
        w.row(std::to_string(r.community_id) + "," + std::to_string(r.month) + "," +
              csv::fmt_fixed(r.price, 2));
}

void write_communities_csv(const std::string& path, const std::vector<CommunitySite>& rows) {
    csv::Writer w(path, "id,lat,lon");
    for (const auto& r : rows)
        w.row(std::to_string(r.id) + "," + csv::fmt_fixed(r.center.lat, 8) + "," +
              csv::fmt_fixed(r.center.lon, 8));
}

} // namespace lucgen::geo
