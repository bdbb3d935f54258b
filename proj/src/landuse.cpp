#include "lucgen/landuse.hpp"

#include <cmath>
#include <cstddef>

#include "lucgen/csv.hpp"
#include "lucgen/errors.hpp"

namespace lucgen::land {

using num::Tensor;

// ---- configuration tensor --------------------------------------------------------

LandUseConfig make_config(int categories, int grid) {
    if (categories < 1) throw PreconditionError("landuse: categories must be >= 1");
    if (grid < 1) throw PreconditionError("landuse: grid must be >= 1");
    return {Tensor::zeros({static_cast<std::size_t>(categories),
                           static_cast<std::size_t>(grid), static_cast<std::size_t>(grid)})};
}

void check_config(const LandUseConfig& cfg) {
    if (cfg.tensor.rank() != 3 || cfg.tensor.dim(1) != cfg.tensor.dim(2))
        throw ShapeError("landuse: config tensor must have shape {m, n, n}");
    if (cfg.tensor.dim(0) == 0 || cfg.tensor.dim(1) == 0)
        throw ShapeError("landuse: config tensor must be non-empty");
    for (std::size_t i = 0; i < cfg.tensor.size(); ++i) {
        const double v = cfg.tensor[i];
        if (!std::isfinite(v)) throw DomainError("landuse: non-finite config entry");
        if (v < 0.0) throw DomainError("landuse: negative config entry");
    }
}

LandUseConfig build_config(const std::vector<geo::PoiRecord>& pois,
                           const geo::AreaFrame& frame, int categories, int grid) {
    LandUseConfig cfg = make_config(categories, grid);
    for (const auto& p : pois) {
        if (p.category < 0 || p.category >= categories)
            throw PreconditionError("landuse: POI category out of range");
        const auto cell = geo::grid_cell(p.pos, frame, grid);
        if (!cell) continue;
        cfg.tensor.at3(static_cast<std::size_t>(p.category),
                       static_cast<std::size_t>(cell->first),
                       static_cast<std::size_t>(cell->second)) += 1.0;
    }
    return cfg;
}

// ---- quality score ---------------------------------------------------------------

double diversity(const LandUseConfig& cfg) {
    check_config(cfg);
    const std::size_t m = cfg.tensor.dim(0);
    const std::size_t cells = cfg.tensor.dim(1) * cfg.tensor.dim(2);
    std::vector<double> totals(m, 0.0);
    double grand = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
        for (std::size_t i = 0; i < cells; ++i) totals[c] += cfg.tensor[c * cells + i];
        grand += totals[c];
    }
    if (grand <= 0.0 || m < 2) return 0.0;
    double entropy = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
        const double p = totals[c] / grand;
        if (p > 0.0) entropy -= p * std::log(p);
    }
    return entropy / std::log(static_cast<double>(m));
}

std::int64_t checkin_count(const std::vector<geo::CheckInRecord>& checkins,
                           const geo::AreaFrame& frame) {
    const geo::AreaFrame::Box box = frame.central_box();
    std::int64_t count = 0;
    for (const auto& r : checkins) {
        double x = 0.0;
        double y = 0.0;
        frame.local(r.pos, x, y);
        if (box.contains(x, y)) ++count;
    }
    return count;
}

double checkin_frequency(std::int64_t count, const CheckinStats& stats) {
    if (stats.min_count > stats.max_count)
        throw PreconditionError("landuse: check-in stats min exceeds max");
    if (stats.min_count == stats.max_count) return 0.5;
    double f = static_cast<double>(count - stats.min_count) /
               static_cast<double>(stats.max_count - stats.min_count);
    if (f < 0.0) f = 0.0;
    if (f > 1.0) f = 1.0;
    return f;
}

double checkin_frequency(const std::vector<geo::CheckInRecord>& checkins,
                         const geo::AreaFrame& frame, const CheckinStats& stats) {
    return checkin_frequency(checkin_count(checkins, frame), stats);
}

QualityScore quality(double freq, double div) {
    if (!(freq >= 0.0 && freq <= 1.0)) throw PreconditionError("landuse: freq outside [0,1]");
    if (!(div >= 0.0 && div <= 1.0)) throw PreconditionError("landuse: div outside [0,1]");
    QualityScore s;
    s.freq = freq;
    s.div = div;
    s.q = (freq + div > 0.0) ? 2.0 * freq * div / (freq + div) : 0.0;
    return s;
}

QualityLabel label(double q) {
    return q > 0.5 ? QualityLabel::Excellent : QualityLabel::Terrible;
}

const char* label_name(QualityLabel l) {
    return l == QualityLabel::Excellent ? "excellent" : "terrible";
}

// ---- report artifacts ------------------------------------------------------------

CategoryMap merge_dominant(const LandUseConfig& cfg) {
    check_config(cfg);
    const std::size_t m = cfg.tensor.dim(0);
    const std::size_t n = cfg.tensor.dim(1);
    CategoryMap map;
    map.grid = static_cast<int>(n);
    map.codes.assign(n * n, kEmptyCell);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t col = 0; col < n; ++col) {
            int best = kEmptyCell;
            double best_v = 0.0;
            for (std::size_t c = 0; c < m; ++c) {
                const double v = cfg.tensor.at3(c, r, col);
                if (v > best_v) {
                    best_v = v;
                    best = static_cast<int>(c);
                }
            }
            map.codes[r * n + col] = best;
        }
    return map;
}

std::vector<double> poi_proportions(const LandUseConfig& cfg) {
    check_config(cfg);
    const std::size_t m = cfg.tensor.dim(0);
    const std::size_t cells = cfg.tensor.dim(1) * cfg.tensor.dim(2);
    std::vector<double> totals(m, 0.0);
    double grand = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
        for (std::size_t i = 0; i < cells; ++i) totals[c] += cfg.tensor[c * cells + i];
        grand += totals[c];
    }
    if (grand > 0.0)
        for (auto& t : totals) t /= grand;
    return totals;
}

// ---- file format -----------------------------------------------------------------

void write_config_csv(const std::string& path, const LandUseConfig& cfg) {
    check_config(cfg);
    csv::Writer w(path, "channel,row,col,value");
    const std::size_t m = cfg.tensor.dim(0);
    const std::size_t n = cfg.tensor.dim(1);
    for (std::size_t c = 0; c < m; ++c)
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t col = 0; col < n; ++col) {
                const double v = cfg.tensor.at3(c, r, col);
                if (v == 0.0) continue;
                w.row(std::to_string(c) + ',' + std::to_string(r) + ',' +
                      std::to_string(col) + ',' + csv::fmt_exact(v));
            }
}

LandUseConfig read_config_csv(const std::string& path, int categories, int grid) {
    LandUseConfig cfg = make_config(categories, grid);
    csv::Reader reader(path, "channel,row,col,value");
    std::vector<std::string> f;
    while (reader.next(f)) {
        long long c = 0;
        long long r = 0;
        long long col = 0;
        double v = 0.0;
        if (f.size() != 4 || !csv::parse_int64(f[0], c) || !csv::parse_int64(f[1], r) ||
            !csv::parse_int64(f[2], col) || !csv::parse_double(f[3], v))
            throw IngestError(path + ": malformed config row");
        if (c < 0 || c >= categories || r < 0 || r >= grid || col < 0 || col >= grid)
            throw IngestError(path + ": config index out of range");
        if (!std::isfinite(v) || v < 0.0)
            throw IngestError(path + ": config value must be finite and non-negative");
        cfg.tensor.at3(static_cast<std::size_t>(c), static_cast<std::size_t>(r),
                       static_cast<std::size_t>(col)) = v;
    }
    return cfg;
}

} // namespace lucgen::land
