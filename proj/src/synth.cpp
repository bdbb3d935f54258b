#include "lucgen/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lucgen/csv.hpp"

namespace lucgen::geo {

using num::SeededRng;

std::int64_t poisson_draw(double mean, SeededRng& rng) {
    if (!(mean >= 0.0)) throw PreconditionError("poisson: mean must be non-negative");
    if (mean == 0.0) return 0;
    if (mean <= 256.0) {
        const double limit = std::exp(-mean);
        std::int64_t k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= rng.uniform();
        } while (p > limit);
        return k - 1;
    }
    const double draw = mean + std::sqrt(mean) * rng.normal();
    return draw < 0.0 ? 0 : static_cast<std::int64_t>(std::llround(draw));
}

namespace {

constexpr std::int64_t kBaseDay = 19875;  // 2024-06-01

void validate(const SynthConfig& cfg) {
    if (cfg.communities == 0) throw PreconditionError("synth: need at least one community");
    if (cfg.excellent_fraction < 0.0 || cfg.excellent_fraction > 1.0)
        throw PreconditionError("synth: excellent_fraction must lie in [0, 1]");
    if (cfg.categories < 1) throw PreconditionError("synth: need at least one category");
    if (cfg.months < 2) throw PreconditionError("synth: need at least two months of prices");
    if (cfg.days < 1) throw PreconditionError("synth: need at least one day");
    if (!(cfg.side_m > 0.0)) throw PreconditionError("synth: side must be positive");
    if (cfg.terrible_max_categories < 1 || cfg.terrible_max_categories > cfg.categories)
        throw PreconditionError("synth: terrible_max_categories out of range");
    if (!cfg.category_weights.empty() &&
        cfg.category_weights.size() != static_cast<std::size_t>(cfg.categories))
        throw PreconditionError("synth: category_weights must match the category count");
}

Timestamp draw_time(SeededRng& rng, int days) {
    Timestamp t;
    const std::int64_t day = kBaseDay + static_cast<std::int64_t>(rng.index(days));
    t.epoch_s = day * 86400 + static_cast<std::int64_t>(rng.index(86400));
    return t;
}

// Interior point of the central square (stays clear of the half-open edges).
GeoPoint central_point(const AreaFrame& frame, double x, double y) {
    const double h = frame.side_m / 2.0 - 1e-6;
    return frame.from_local(std::clamp(x, -h, h), std::clamp(y, -h, h));
}

GeoPoint block_point(const AreaFrame& frame, SeededRng& rng) {
    const double h = 1.5 * frame.side_m - 1e-6;
    return frame.from_local(rng.uniform(-h, h), rng.uniform(-h, h));
}

double euclid_m(const AreaFrame& frame, const GeoPoint& a, const GeoPoint& b) {
    double ax, ay, bx, by;
    frame.local(a, ax, ay);
    frame.local(b, bx, by);
    return std::hypot(ax - bx, ay - by);
}

} // namespace

SynthCity synth_city(const SynthConfig& cfg) {
    validate(cfg);
    SynthCity city;
    const SeededRng root(cfg.seed);

    std::vector<double> weights = cfg.category_weights;
    if (weights.empty()) weights.assign(cfg.categories, 1.0);
    double wsum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw PreconditionError("synth: category weights must be >= 0");
        wsum += w;
    }
    if (!(wsum > 0.0)) throw PreconditionError("synth: category weights sum to zero");

    const std::size_t grid = static_cast<std::size_t>(
        std::ceil(std::sqrt(static_cast<double>(cfg.communities))));
    const double lat_pitch = cfg.side_m / 111320.0;

    for (std::size_t i = 0; i < cfg.communities; ++i) {
        const std::size_t row = i / grid;
        const std::size_t col = i % grid;
        CommunitySite site;
        site.id = static_cast<std::int64_t>(i);
        site.center.lat = cfg.origin.lat + static_cast<double>(row) * lat_pitch;
        // Pitch per row so same-row squares tile exactly in this row's metric;
        // rows are disjoint in latitude, so squares never overlap.
        const double lon_pitch =
            cfg.side_m / (111320.0 * std::cos(site.center.lat * std::numbers::pi / 180.0));
        site.center.lon = cfg.origin.lon + static_cast<double>(col) * lon_pitch;
        city.communities.push_back(site);
    }

    for (std::size_t i = 0; i < cfg.communities; ++i) {
        const CommunitySite& site = city.communities[i];
        const AreaFrame frame = make_frame(site, cfg.side_m);
        SeededRng comm = root.stream("community", i);
        const bool excellent = comm.uniform() < cfg.excellent_fraction;
        city.planted_excellent.push_back(excellent ? 1 : 0);

        // POIs: per-category Poisson counts under the community's profile.
        SeededRng poi_rng = comm.stream("pois");
        std::vector<double> profile(cfg.categories, 0.0);
        double total_mean;
        if (excellent) {
            for (int c = 0; c < cfg.categories; ++c) profile[c] = weights[c] / wsum;
            total_mean = cfg.poi_mean_excellent;
        } else {
            const std::size_t k =
                1 + poi_rng.index(static_cast<std::size_t>(cfg.terrible_max_categories));
            const auto cats = poi_rng.sample_without_replacement(cfg.categories, k);
            for (std::size_t j = 0; j < k; ++j)
                profile[cats[j]] = 1.0 / static_cast<double>(k);
            total_mean = cfg.poi_mean_terrible;
        }
        const double half = cfg.side_m / 2.0;
        for (int c = 0; c < cfg.categories; ++c) {
            if (profile[c] == 0.0) continue;
            const std::int64_t count = poisson_draw(total_mean * profile[c], poi_rng);
            std::vector<std::pair<double, double>> clusters;
            for (int j = 0; j < cfg.clusters_per_category; ++j)
                clusters.emplace_back(poi_rng.uniform(-half, half),
                                      poi_rng.uniform(-half, half));
            for (std::int64_t j = 0; j < count; ++j) {
                double x, y;
                if (poi_rng.uniform() < cfg.cluster_fraction && !clusters.empty()) {
                    const auto& ctr = clusters[poi_rng.index(clusters.size())];
                    x = ctr.first + cfg.cluster_sigma_m * poi_rng.normal();
                    y = ctr.second + cfg.cluster_sigma_m * poi_rng.normal();
                } else {
                    x = poi_rng.uniform(-half, half);
                    y = poi_rng.uniform(-half, half);
                }
                city.pois.push_back({central_point(frame, x, y), c});
            }
        }

        // Check-ins concentrate where the POIs are planted.
        SeededRng checkin_rng = comm.stream("checkins");
        const double checkin_mean =
            excellent ? cfg.checkin_mean_excellent : cfg.checkin_mean_terrible;
        const std::int64_t checkins = poisson_draw(checkin_mean, checkin_rng);
        for (std::int64_t j = 0; j < checkins; ++j) {
            const GeoPoint p = central_point(frame, checkin_rng.uniform(-half, half),
                                             checkin_rng.uniform(-half, half));
            city.checkins.push_back({p, draw_time(checkin_rng, cfg.days)});
        }

        const double boost = excellent ? cfg.activity_boost_excellent : 1.0;

        SeededRng trip_rng = comm.stream("trips");
        const std::int64_t trips = poisson_draw(cfg.trips_mean * boost, trip_rng);
        for (std::int64_t j = 0; j < trips; ++j) {
            TripRecord r;
            r.pickup = block_point(frame, trip_rng);
            r.dropoff = block_point(frame, trip_rng);
            r.pickup_time = draw_time(trip_rng, cfg.days);
            r.distance_m = std::max(euclid_m(frame, r.pickup, r.dropoff) * 1.3, 10.0);
            r.avg_kmh = trip_rng.uniform(15.0, 55.0);
            r.duration_s = r.distance_m / (r.avg_kmh / 3.6);
            r.dropoff_time.epoch_s =
                r.pickup_time.epoch_s + static_cast<std::int64_t>(r.duration_s);
            city.trips.push_back(r);
        }

        SeededRng fare_rng = comm.stream("fares");
        const std::int64_t fares = poisson_draw(cfg.fares_mean * boost, fare_rng);
        for (std::int64_t j = 0; j < fares; ++j) {
            FareRecord r;
            r.board = block_point(frame, fare_rng);
            r.alight = block_point(frame, fare_rng);
            r.board_time = draw_time(fare_rng, cfg.days);
            r.alight_time.epoch_s = r.board_time.epoch_s + 60 * (1 + fare_rng.index(59));
            r.balance = fare_rng.uniform(0.0, 100.0);
            city.fares.push_back(r);
        }

        SeededRng price_rng = comm.stream("prices");
        const double base = price_rng.uniform(cfg.price_lo, cfg.price_hi);
        const double drift =
            excellent ? cfg.price_drift_excellent : cfg.price_drift_terrible;
        for (int month = 0; month < cfg.months; ++month) {
            const double noise = cfg.price_noise * price_rng.normal();
            const double price =
                std::max(base * (1.0 + drift * month + noise), cfg.price_lo * 0.1);
            city.prices.push_back({site.id, month, price});
        }
    }
    return city;
}

void write_synth_csv(const SynthCity& city, const std::string& dir) {
    write_communities_csv(dir + "/communities.csv", city.communities);
    write_pois_csv(dir + "/pois.csv", city.pois);
    write_trips_csv(dir + "/trips.csv", city.trips);
    write_fares_csv(dir + "/fares.csv", city.fares);
    write_checkins_csv(dir + "/checkins.csv", city.checkins);
    write_prices_csv(dir + "/prices.csv", city.prices);
    csv::Writer w(dir + "/planted.csv", "community_id,planted");
    for (std::size_t i = 0; i < city.communities.size(); ++i)
        w.row(std::to_string(city.communities[i].id) + "," +
              std::to_string(static_cast<int>(city.planted_excellent[i])));
}

std::vector<std::pair<std::int64_t, int>> read_planted_csv(const std::string& path) {
    csv::Reader reader(path, "community_id,planted");
    std::vector<std::pair<std::int64_t, int>> out;
    std::vector<std::string> f;
    while (reader.next(f)) {
        long long id = 0, flag = 0;
        if (f.size() == 2 && csv::parse_int64(f[0], id) && csv::parse_int64(f[1], flag) &&
            (flag == 0 || flag == 1))
            out.emplace_back(id, static_cast<int>(flag));
    }
    return out;
}

} // namespace lucgen::geo
