#include "lucgen/features.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>
#include <utility>

#include "lucgen/csv.hpp"
#include "lucgen/errors.hpp"

namespace lucgen::feat {

using geo::AreaFrame;
using geo::CommunitySite;
using geo::FareRecord;
using geo::GeoPoint;
using geo::PoiRecord;
using geo::PriceObservation;
using geo::TripRecord;
using num::Tensor;

namespace {

// Slop added when converting a local-frame box to a lat/lon candidate
// rectangle, so conversion rounding can never drop a true member.
constexpr double kRectSlopDeg = 1e-7;

void box_rect(const AreaFrame& f, const AreaFrame::Box& b,
              double& lat_lo, double& lat_hi, double& lon_lo, double& lon_hi) {
    lat_lo = f.center.lat + b.y_lo / f.m_per_deg_lat - kRectSlopDeg;
    lat_hi = f.center.lat + b.y_hi / f.m_per_deg_lat + kRectSlopDeg;
    lon_lo = f.center.lon + b.x_lo / f.m_per_deg_lon - kRectSlopDeg;
    lon_hi = f.center.lon + b.x_hi / f.m_per_deg_lon + kRectSlopDeg;
}

double box_area_km2(const AreaFrame::Box& b) {
    return (b.x_hi - b.x_lo) * (b.y_hi - b.y_lo) / 1e6;
}

std::pair<std::int64_t, std::int64_t> stop_key(const GeoPoint& p) {
    return {std::llround(p.lat * 1e5), std::llround(p.lon * 1e5)};
}

std::vector<std::size_t> merge_sorted_unique(std::vector<std::size_t> a,
                                             const std::vector<std::size_t>& b) {
    a.insert(a.end(), b.begin(), b.end());
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    return a;
}

std::size_t distinct_start_days(const std::vector<TripRecord>& trips) {
    std::set<std::int64_t> days;
    for (const auto& t : trips) days.insert(t.pickup_time.day());
    return std::max<std::size_t>(1, days.size());
}

std::size_t distinct_start_days(const std::vector<FareRecord>& fares) {
    std::set<std::int64_t> days;
    for (const auto& f : fares) days.insert(f.board_time.day());
    return std::max<std::size_t>(1, days.size());
}

void check_params(const FeatureParams& p) {
    if (p.categories < 1) throw PreconditionError("features: categories must be >= 1");
    if (p.months < 2) throw PreconditionError("features: months must be >= 2");
    if (!(p.side_m > 0.0)) throw PreconditionError("features: side_m must be > 0");
}

}  // namespace

// ---- pure helpers --------------------------------------------------------------

std::vector<double> value_added_trend(const std::vector<double>& monthly_means) {
    if (monthly_means.size() < 2)
        throw PreconditionError("value_added_trend: need at least two months");
    std::vector<double> diffs(monthly_means.size() - 1);
    for (std::size_t i = 0; i + 1 < monthly_means.size(); ++i)
        diffs[i] = monthly_means[i + 1] - monthly_means[i];
    return diffs;
}

std::vector<double> poi_ratio(const std::vector<std::int64_t>& counts) {
    std::int64_t total = 0;
    for (auto c : counts) {
        if (c < 0) throw PreconditionError("poi_ratio: negative count");
        total += c;
    }
    std::vector<double> ratio(counts.size(), 0.0);
    if (total > 0)
        for (std::size_t i = 0; i < counts.size(); ++i)
            ratio[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
    return ratio;
}

Tensor assemble(const Tensor& V, const Tensor& R, const Tensor& O, const Tensor& U) {
    const Tensor* blocks[4] = {&V, &R, &O, &U};
    std::size_t k = 0;
    for (const Tensor* b : blocks) {
        if (b->rank() != 2 || b->rows() != 8)
            throw ShapeError("assemble: every block must have exactly 8 rows, got " +
                             num::shape_str(*b));
        k += b->cols();
    }
    Tensor out = Tensor::zeros({8, k});
    for (std::size_t r = 0; r < 8; ++r) {
        std::size_t j = 0;
        for (const Tensor* b : blocks)
            for (std::size_t c = 0; c < b->cols(); ++c) out.at2(r, j++) = b->at2(r, c);
    }
    return out;
}

// ---- bucket grid ---------------------------------------------------------------

PointIndex::PointIndex(std::vector<GeoPoint> pts, double cell_deg) : pts_(std::move(pts)) {
    if (!(cell_deg > 0.0)) throw PreconditionError("PointIndex: cell size must be > 0");
    if (pts_.empty()) return;
    double lat_hi = pts_[0].lat, lon_hi = pts_[0].lon;
    lat0_ = pts_[0].lat;
    lon0_ = pts_[0].lon;
    for (const auto& p : pts_) {
        lat0_ = std::min(lat0_, p.lat);
        lat_hi = std::max(lat_hi, p.lat);
        lon0_ = std::min(lon0_, p.lon);
        lon_hi = std::max(lon_hi, p.lon);
    }
    constexpr std::size_t kMaxCellsPerAxis = 2048;
    const double lat_range = lat_hi - lat0_;
    const double lon_range = lon_hi - lon0_;
    nrows_ = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::ceil(lat_range / cell_deg)), 1, kMaxCellsPerAxis);
    ncols_ = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::ceil(lon_range / cell_deg)), 1, kMaxCellsPerAxis);
    cell_lat_ = lat_range > 0.0 ? lat_range / static_cast<double>(nrows_) : 1.0;
    cell_lon_ = lon_range > 0.0 ? lon_range / static_cast<double>(ncols_) : 1.0;
    cells_.assign(nrows_ * ncols_, {});
    for (std::size_t i = 0; i < pts_.size(); ++i) cells_[cell_of(pts_[i].lat, pts_[i].lon)].push_back(i);
}

std::size_t PointIndex::cell_of(double lat, double lon) const {
    auto clamp_idx = [](double v, std::size_t n) {
        if (!(v > 0.0)) return std::size_t{0};
        const std::size_t i = static_cast<std::size_t>(v);
        return std::min(i, n - 1);
    };
    const std::size_t r = clamp_idx((lat - lat0_) / cell_lat_, nrows_);
    const std::size_t c = clamp_idx((lon - lon0_) / cell_lon_, ncols_);
    return r * ncols_ + c;
}

std::vector<std::size_t> PointIndex::query(double lat_lo, double lat_hi,
                                           double lon_lo, double lon_hi) const {
    std::vector<std::size_t> out;
    if (pts_.empty()) return out;
    const double r_lo_f = std::floor((lat_lo - lat0_) / cell_lat_);
    const double r_hi_f = std::floor((lat_hi - lat0_) / cell_lat_);
    const double c_lo_f = std::floor((lon_lo - lon0_) / cell_lon_);
    const double c_hi_f = std::floor((lon_hi - lon0_) / cell_lon_);
    if (r_hi_f < 0.0 || c_hi_f < 0.0) return out;
    if (r_lo_f >= static_cast<double>(nrows_) || c_lo_f >= static_cast<double>(ncols_)) return out;
    const std::size_t r_lo = r_lo_f < 0.0 ? 0 : std::min<std::size_t>(static_cast<std::size_t>(r_lo_f), nrows_ - 1);
    const std::size_t r_hi = r_hi_f < 0.0 ? 0 : std::min<std::size_t>(static_cast<std::size_t>(r_hi_f), nrows_ - 1);
    const std::size_t c_lo = c_lo_f < 0.0 ? 0 : std::min<std::size_t>(static_cast<std::size_t>(c_lo_f), ncols_ - 1);
    const std::size_t c_hi = c_hi_f < 0.0 ? 0 : std::min<std::size_t>(static_cast<std::size_t>(c_hi_f), ncols_ - 1);
    for (std::size_t r = r_lo; r <= r_hi; ++r)
        for (std::size_t c = c_lo; c <= c_hi; ++c)
            for (std::size_t i : cells_[r * ncols_ + c]) {
                const GeoPoint& p = pts_[i];
                if (p.lat >= lat_lo && p.lat <= lat_hi && p.lon >= lon_lo && p.lon <= lon_hi)
                    out.push_back(i);
            }
    std::sort(out.begin(), out.end());
    return out;
}

// ---- indexed extractor -----------------------------------------------------------

FeatureExtractor::FeatureExtractor(const std::vector<CommunitySite>& communities,
                                   std::vector<PoiRecord> pois,
                                   std::vector<TripRecord> trips,
                                   std::vector<FareRecord> fares,
                                   std::vector<PriceObservation> prices,
                                   const FeatureParams& params)
    : pois_(std::move(pois)),
      trips_(std::move(trips)),
      fares_(std::move(fares)),
      prices_(std::move(prices)),
      params_(params) {
    check_params(params_);
    const double cell = params_.side_m / 111320.0;

    auto points_of = [](const auto& rows, auto&& get) {
        std::vector<GeoPoint> pts;
        pts.reserve(rows.size());
        for (const auto& r : rows) pts.push_back(get(r));
        return pts;
    };
    poi_idx_ = PointIndex(points_of(pois_, [](const PoiRecord& r) { return r.pos; }), cell);
    trip_pick_idx_ = PointIndex(points_of(trips_, [](const TripRecord& r) { return r.pickup; }), cell);
    trip_drop_idx_ = PointIndex(points_of(trips_, [](const TripRecord& r) { return r.dropoff; }), cell);
    fare_board_idx_ = PointIndex(points_of(fares_, [](const FareRecord& r) { return r.board; }), cell);
    fare_alight_idx_ = PointIndex(points_of(fares_, [](const FareRecord& r) { return r.alight; }), cell);

    std::unordered_map<std::int64_t, GeoPoint> site_pos;
    for (const auto& c : communities) site_pos.emplace(c.id, c.center);
    for (std::size_t i = 0; i < prices_.size(); ++i) {
        const auto& obs = prices_[i];
        const auto it = site_pos.find(obs.community_id);
        if (it == site_pos.end()) continue;
        if (obs.month < 0 || obs.month >= params_.months) continue;
        price_obs_ids_.push_back(i);
        price_pos_.push_back(it->second);
    }
    price_idx_ = PointIndex(price_pos_, cell);

    fare_days_ = distinct_start_days(fares_);
    trip_days_ = distinct_start_days(trips_);
}

int FeatureExtractor::feature_count() const {
    return (params_.months - 1) + params_.categories + 10;
}

Tensor FeatureExtractor::context_features(const CommunitySite& site) const {
    const AreaFrame frame = geo::make_frame(site, params_.side_m);
    const int t = params_.months;
    const int m = params_.categories;
    Tensor V = Tensor::zeros({8, static_cast<std::size_t>(t - 1)});
    Tensor R = Tensor::zeros({8, static_cast<std::size_t>(m)});
    Tensor O = Tensor::zeros({8, 5});
    Tensor U = Tensor::zeros({8, 5});

    for (int k = 1; k <= geo::kContextCount; ++k) {
        const AreaFrame::Box box = frame.context_box(k);
        double lat_lo, lat_hi, lon_lo, lon_hi;
        box_rect(frame, box, lat_lo, lat_hi, lon_lo, lon_hi);
        const std::size_t row = static_cast<std::size_t>(k - 1);
        auto inside = [&](const GeoPoint& p) {
            double x, y;
            frame.local(p, x, y);
            return box.contains(x, y);
        };

        // V: monthly mean price of communities inside, then first differences.
        {
            std::vector<double> sum(static_cast<std::size_t>(t), 0.0);
            std::vector<std::int64_t> cnt(static_cast<std::size_t>(t), 0);
            bool any = false;
            for (std::size_t ci : price_idx_.query(lat_lo, lat_hi, lon_lo, lon_hi)) {
                const PriceObservation& ob = prices_[price_obs_ids_[ci]];
                // Membership is decided from the community center the
                // observation attaches to.
                if (!inside(price_pos_[ci])) continue;
                sum[static_cast<std::size_t>(ob.month)] += ob.price;
                cnt[static_cast<std::size_t>(ob.month)] += 1;
                any = true;
            }
            if (any) {
                std::vector<double> means(static_cast<std::size_t>(t), 0.0);
                for (int i = 0; i < t; ++i)
                    means[i] = cnt[i] > 0 ? sum[i] / static_cast<double>(cnt[i]) : 0.0;
                for (int i = 0; i + 1 < t; ++i) V.at2(row, i) = means[i + 1] - means[i];
            }
        }

        // R: POI category shares.
        {
            std::vector<std::int64_t> counts(static_cast<std::size_t>(m), 0);
            for (std::size_t i : poi_idx_.query(lat_lo, lat_hi, lon_lo, lon_hi)) {
                const PoiRecord& p = pois_[i];
                if (inside(p.pos)) counts[static_cast<std::size_t>(p.category)] += 1;
            }
            const std::vector<double> ratio = poi_ratio(counts);
            for (int j = 0; j < m; ++j) R.at2(row, j) = ratio[j];
        }

        // O: fare-card statistics.
        {
            std::int64_t boardings = 0, alightings = 0, internal = 0, touching = 0;
            double balance_sum = 0.0;
            std::set<std::pair<std::int64_t, std::int64_t>> stops;
            const auto cand = merge_sorted_unique(
                fare_board_idx_.query(lat_lo, lat_hi, lon_lo, lon_hi),
                fare_alight_idx_.query(lat_lo, lat_hi, lon_lo, lon_hi));
            for (std::size_t i : cand) {
                const FareRecord& f = fares_[i];
                const bool bi = inside(f.board);
                const bool ai = inside(f.alight);
                if (bi) { boardings += 1; stops.insert(stop_key(f.board)); }
                if (ai) { alightings += 1; stops.insert(stop_key(f.alight)); }
                if (bi && ai) internal += 1;
                if (bi || ai) { touching += 1; balance_sum += f.balance; }
            }
            const double days = static_cast<double>(fare_days_);
            O.at2(row, 0) = static_cast<double>(boardings) / days;
            O.at2(row, 1) = static_cast<double>(alightings) / days;
            O.at2(row, 2) = static_cast<double>(internal) / days;
            O.at2(row, 3) = static_cast<double>(stops.size()) / box_area_km2(box);
            O.at2(row, 4) = touching > 0 ? balance_sum / static_cast<double>(touching) : 0.0;
        }

        // U: taxi-trip statistics.
        {
            std::int64_t leaving = 0, arriving = 0, internal = 0, touching = 0;
            double speed_sum = 0.0, dist_sum = 0.0;
            const auto cand = merge_sorted_unique(
                trip_pick_idx_.query(lat_lo, lat_hi, lon_lo, lon_hi),
                trip_drop_idx_.query(lat_lo, lat_hi, lon_lo, lon_hi));
            for (std::size_t i : cand) {
                const TripRecord& tr = trips_[i];
                const bool pi = inside(tr.pickup);
                const bool di = inside(tr.dropoff);
                if (pi) leaving += 1;
                if (di) arriving += 1;
                if (pi && di) internal += 1;
                if (pi || di) { touching += 1; speed_sum += tr.avg_kmh; dist_sum += tr.distance_m; }
            }
            const double days = static_cast<double>(trip_days_);
            U.at2(row, 0) = static_cast<double>(leaving) / days;
            U.at2(row, 1) = static_cast<double>(arriving) / days;
            U.at2(row, 2) = static_cast<double>(internal) / days;
            U.at2(row, 3) = touching > 0 ? speed_sum / static_cast<double>(touching) : 0.0;
            U.at2(row, 4) = touching > 0 ? dist_sum / static_cast<double>(touching) : 0.0;
        }
    }
    return assemble(V, R, O, U);
}

// ---- reference recount -----------------------------------------------------------

namespace reference {

Tensor context_features(const std::vector<CommunitySite>& communities,
                        const std::vector<PoiRecord>& pois,
                        const std::vector<TripRecord>& trips,
                        const std::vector<FareRecord>& fares,
                        const std::vector<PriceObservation>& prices,
                        const CommunitySite& site, const FeatureParams& params) {
    check_params(params);
    const AreaFrame frame = geo::make_frame(site, params.side_m);
    const int t = params.months;
    const int m = params.categories;
    Tensor V = Tensor::zeros({8, static_cast<std::size_t>(t - 1)});
    Tensor R = Tensor::zeros({8, static_cast<std::size_t>(m)});
    Tensor O = Tensor::zeros({8, 5});
    Tensor U = Tensor::zeros({8, 5});

    std::unordered_map<std::int64_t, GeoPoint> site_pos;
    for (const auto& c : communities) site_pos.emplace(c.id, c.center);
    const double fare_days = static_cast<double>(distinct_start_days(fares));
    const double trip_days = static_cast<double>(distinct_start_days(trips));

    for (int k = 1; k <= geo::kContextCount; ++k) {
        const AreaFrame::Box box = frame.context_box(k);
        const std::size_t row = static_cast<std::size_t>(k - 1);
        auto inside = [&](const GeoPoint& p) {
            double x, y;
            frame.local(p, x, y);
            return box.contains(x, y);
        };

        std::vector<double> sum(static_cast<std::size_t>(t), 0.0);
        std::vector<std::int64_t> cnt(static_cast<std::size_t>(t), 0);
        bool any = false;
        for (const auto& ob : prices) {
            const auto it = site_pos.find(ob.community_id);
            if (it == site_pos.end()) continue;
            if (ob.month < 0 || ob.month >= t) continue;
            if (!inside(it->second)) continue;
            sum[static_cast<std::size_t>(ob.month)] += ob.price;
            cnt[static_cast<std::size_t>(ob.month)] += 1;
            any = true;
        }
        if (any) {
            std::vector<double> means(static_cast<std::size_t>(t), 0.0);
            for (int i = 0; i < t; ++i)
                means[i] = cnt[i] > 0 ? sum[i] / static_cast<double>(cnt[i]) : 0.0;
            for (int i = 0; i + 1 < t; ++i) V.at2(row, i) = means[i + 1] - means[i];
        }

        std::vector<std::int64_t> counts(static_cast<std::size_t>(m), 0);
        for (const auto& p : pois)
            if (inside(p.pos)) counts[static_cast<std::size_t>(p.category)] += 1;
        const std::vector<double> ratio = poi_ratio(counts);
        for (int j = 0; j < m; ++j) R.at2(row, j) = ratio[j];

        std::int64_t boardings = 0, alightings = 0, f_internal = 0, f_touching = 0;
        double balance_sum = 0.0;
        std::set<std::pair<std::int64_t, std::int64_t>> stops;
        for (const auto& f : fares) {
            const bool bi = inside(f.board);
            const bool ai = inside(f.alight);
            if (bi) { boardings += 1; stops.insert(stop_key(f.board)); }
            if (ai) { alightings += 1; stops.insert(stop_key(f.alight)); }
            if (bi && ai) f_internal += 1;
            if (bi || ai) { f_touching += 1; balance_sum += f.balance; }
        }
        O.at2(row, 0) = static_cast<double>(boardings) / fare_days;
        O.at2(row, 1) = static_cast<double>(alightings) / fare_days;
        O.at2(row, 2) = static_cast<double>(f_internal) / fare_days;
        O.at2(row, 3) = static_cast<double>(stops.size()) / box_area_km2(box);
        O.at2(row, 4) = f_touching > 0 ? balance_sum / static_cast<double>(f_touching) : 0.0;

        std::int64_t leaving = 0, arriving = 0, t_internal = 0, t_touching = 0;
        double speed_sum = 0.0, dist_sum = 0.0;
        for (const auto& tr : trips) {
            const bool pi = inside(tr.pickup);
            const bool di = inside(tr.dropoff);
            if (pi) leaving += 1;
            if (di) arriving += 1;
            if (pi && di) t_internal += 1;
            if (pi || di) { t_touching += 1; speed_sum += tr.avg_kmh; dist_sum += tr.distance_m; }
        }
        U.at2(row, 0) = static_cast<double>(leaving) / trip_days;
        U.at2(row, 1) = static_cast<double>(arriving) / trip_days;
        U.at2(row, 2) = static_cast<double>(t_internal) / trip_days;
        U.at2(row, 3) = t_touching > 0 ? speed_sum / static_cast<double>(t_touching) : 0.0;
        U.at2(row, 4) = t_touching > 0 ? dist_sum / static_cast<double>(t_touching) : 0.0;
    }
    return assemble(V, R, O, U);
}

}  // namespace reference

// ---- standardization ---------------------------------------------------------

FeatureScaler fit_scaler(const std::vector<Tensor>& corpus) {
    if (corpus.empty()) throw PreconditionError("fit_scaler: empty corpus");
    const std::size_t k = corpus[0].cols();
    std::size_t n = 0;
    for (const auto& x : corpus) {
        if (x.rank() != 2 || x.cols() != k)
            throw ShapeError("fit_scaler: inconsistent matrix shapes in corpus");
        n += x.rows();
    }
    if (n == 0) throw PreconditionError("fit_scaler: corpus has no rows");

    FeatureScaler s;
    s.mean.assign(k, 0.0);
    s.sigma.assign(k, 1.0);
    for (const auto& x : corpus)
        for (std::size_t i = 0; i < x.rows(); ++i)
            for (std::size_t j = 0; j < k; ++j) s.mean[j] += x.at2(i, j);
    for (std::size_t j = 0; j < k; ++j) s.mean[j] /= static_cast<double>(n);

    std::vector<double> var(k, 0.0);
    for (const auto& x : corpus)
        for (std::size_t i = 0; i < x.rows(); ++i)
            for (std::size_t j = 0; j < k; ++j) {
                const double d = x.at2(i, j) - s.mean[j];
                var[j] += d * d;
            }
    for (std::size_t j = 0; j < k; ++j) {
        const double sd = std::sqrt(var[j] / static_cast<double>(n));
        if (sd > 0.0) {
            s.sigma[j] = sd;
        } else {
            // Constant column: pass through unchanged.
            s.mean[j] = 0.0;
            s.sigma[j] = 1.0;
        }
    }
    return s;
}

Tensor apply_scaler(const Tensor& x, const FeatureScaler& s) {
    if (x.rank() != 2 || x.cols() != s.mean.size() || s.mean.size() != s.sigma.size())
        throw ShapeError("apply_scaler: column count mismatch");
    Tensor y = Tensor::zeros_like(x);
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j)
            y.at2(i, j) = (x.at2(i, j) - s.mean[j]) / s.sigma[j];
    num::ensure_finite(y, "apply_scaler output");
    return y;
}

// ---- persistence ---------------------------------------------------------------

std::vector<std::string> feature_names(int months, int categories) {
    if (months < 2) throw PreconditionError("feature_names: months must be >= 2");
    if (categories < 1) throw PreconditionError("feature_names: categories must be >= 1");
    std::vector<std::string> names;
    for (int i = 1; i < months; ++i) names.push_back("v_diff_" + std::to_string(i));
    for (int c = 0; c < categories; ++c) names.push_back("r_cat_" + std::to_string(c));
    for (const char* n : {"o_board_daily", "o_alight_daily", "o_internal_daily",
                          "o_stop_density", "o_balance_mean"})
        names.push_back(n);
    for (const char* n : {"u_leave_daily", "u_arrive_daily", "u_internal_daily",
                          "u_speed_mean", "u_dist_mean"})
        names.push_back(n);
    return names;
}

namespace {

std::string features_header(int months, int categories) {
    std::string h = "community_id,context_index";
    for (const auto& n : feature_names(months, categories)) h += "," + n;
    return h;
}

}  // namespace

void write_features_csv(const std::string& path, const std::vector<std::int64_t>& ids,
                        const std::vector<Tensor>& matrices, int months, int categories) {
    if (ids.size() != matrices.size())
        throw PreconditionError("write_features_csv: ids/matrices size mismatch");
    const std::size_t k = feature_names(months, categories).size();
    csv::Writer w(path, features_header(months, categories));
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const Tensor& x = matrices[i];
        if (x.rank() != 2 || x.rows() != 8 || x.cols() != k)
            throw ShapeError("write_features_csv: matrix must be 8 x " + std::to_string(k) +
                             ", got " + num::shape_str(x));
        for (std::size_t r = 0; r < 8; ++r) {
            std::string line = std::to_string(ids[i]) + "," + std::to_string(r + 1);
            for (std::size_t j = 0; j < k; ++j) line += "," + csv::fmt_exact(x.at2(r, j));
            w.row(line);
        }
    }
}

FeatureTable read_features_csv(const std::string& path, int months, int categories) {
    const std::size_t k = feature_names(months, categories).size();
    csv::Reader r(path, features_header(months, categories));
    FeatureTable out;
    std::vector<std::string> f;
    std::size_t line = 1;
    long long expect_ctx = 1;  // each community must appear as 8 rows, contexts 1..8
    while (r.next(f)) {
        ++line;
        if (f.size() != k + 2)
            throw IngestError(path + ": line " + std::to_string(line) + ": wrong field count");
        long long id = 0, ctx = 0;
        if (!csv::parse_int64(f[0], id) || !csv::parse_int64(f[1], ctx))
            throw IngestError(path + ": line " + std::to_string(line) + ": bad id fields");
        if (ctx != expect_ctx)
            throw IngestError(path + ": line " + std::to_string(line) + ": expected context " +
                              std::to_string(expect_ctx));
        if (ctx == 1) {
            out.ids.push_back(id);
            out.matrices.push_back(Tensor::zeros({8, k}));
        } else if (out.ids.back() != id) {
            throw IngestError(path + ": line " + std::to_string(line) + ": community id changed mid-block");
        }
        Tensor& x = out.matrices.back();
        for (std::size_t j = 0; j < k; ++j) {
            double v = 0.0;
            if (!csv::parse_double(f[j + 2], v))
                throw IngestError(path + ": line " + std::to_string(line) + ": bad number");
            x.at2(static_cast<std::size_t>(ctx - 1), j) = v;
        }
        expect_ctx = expect_ctx == 8 ? 1 : expect_ctx + 1;
    }
    if (expect_ctx != 1) throw IngestError(path + ": truncated final community block");
    return out;
}

}  // namespace lucgen::feat
