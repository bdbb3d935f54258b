#pragma once

// Randomized city fixtures shared by the unit tests and the acceptance
// harness: scattered (non-grid) communities and records plus probe sites,
// for checking the indexed feature extractor against the full recount.

#include <cstdint>
#include <vector>

#include "lucgen/features.hpp"
#include "lucgen/geodata.hpp"
#include "lucgen/rng.hpp"

namespace lucgen::testsupport {

struct FeatureFixture {
    std::vector<geo::CommunitySite> communities;
    std::vector<geo::PoiRecord> pois;
    std::vector<geo::TripRecord> trips;
    std::vector<geo::FareRecord> fares;
    std::vector<geo::PriceObservation> prices;
    std::vector<geo::CommunitySite> probes;
    feat::FeatureParams params;
};

inline FeatureFixture make_feature_fixture(std::uint64_t seed) {
    num::SeededRng rng(seed);
    FeatureFixture fx;
    fx.params.categories = 6 + static_cast<int>(rng.index(15));
    fx.params.months = 2 + static_cast<int>(rng.index(5));
    fx.params.side_m = 400.0 + rng.uniform() * 1100.0;

    const double lat0 = -40.0 + rng.uniform() * 80.0;
    const double lon0 = -120.0 + rng.uniform() * 240.0;
    const double extent_m = 3000.0 + rng.uniform() * 5000.0;
    const double lat_span = extent_m / 111320.0;
    const double lon_span = extent_m / (111320.0 * 0.7);  // generous, exactness not needed

    auto random_point = [&]() {
        geo::GeoPoint p;
        p.lat = lat0 + rng.uniform() * lat_span;
        p.lon = lon0 + rng.uniform() * lon_span;
        return p;
    };
    auto random_time = [&]() {
        geo::Timestamp t;
        t.epoch_s = 1700000000 + static_cast<std::int64_t>(rng.index(5 * 86400));
        return t;
    };

    const std::size_t n_comm = 5 + rng.index(21);
    for (std::size_t i = 0; i < n_comm; ++i) {
        geo::CommunitySite s;
        s.id = static_cast<std::int64_t>(i * 3 + 11);
        s.center = random_point();
        fx.communities.push_back(s);
    }

    const std::size_t n_poi = 100 + rng.index(301);
    for (std::size_t i = 0; i < n_poi; ++i) {
        geo::PoiRecord p;
        p.pos = random_point();
        p.category = static_cast<int>(rng.index(static_cast<std::size_t>(fx.params.categories)));
        fx.pois.push_back(p);
    }

    const std::size_t n_trip = 50 + rng.index(151);
    for (std::size_t i = 0; i < n_trip; ++i) {
        geo::TripRecord t;
        t.pickup = random_point();
        t.dropoff = random_point();
        t.pickup_time = random_time();
        t.dropoff_time.epoch_s = t.pickup_time.epoch_s + 60 + static_cast<std::int64_t>(rng.index(3600));
        t.distance_m = 50.0 + rng.uniform() * 9000.0;
        t.duration_s = static_cast<double>(t.dropoff_time.epoch_s - t.pickup_time.epoch_s);
        t.avg_kmh = 10.0 + rng.uniform() * 50.0;
        fx.trips.push_back(t);
    }

    const std::size_t n_fare = 50 + rng.index(151);
    for (std::size_t i = 0; i < n_fare; ++i) {
        geo::FareRecord f;
        f.board = random_point();
        f.alight = random_point();
        f.board_time = random_time();
        f.alight_time.epoch_s = f.board_time.epoch_s + 60 + static_cast<std::int64_t>(rng.index(3600));
        f.balance = rng.uniform() * 120.0;
        fx.fares.push_back(f);
    }

    for (const auto& c : fx.communities)
        for (int mth = 0; mth < fx.params.months; ++mth) {
            const std::size_t obs = rng.index(3);  // 0..2 observations per month
            for (std::size_t o = 0; o < obs; ++o) {
                geo::PriceObservation pr;
                pr.community_id = c.id;
                pr.month = mth;
                pr.price = 10000.0 + rng.uniform() * 50000.0;
                fx.prices.push_back(pr);
            }
        }
    // A few observations that reference no known community; they must be ignored.
    for (int i = 0; i < 3; ++i) {
        geo::PriceObservation pr;
        pr.community_id = 999900 + i;
        pr.month = static_cast<int>(rng.index(static_cast<std::size_t>(fx.params.months)));
        pr.price = 12345.0;
        fx.prices.push_back(pr);
    }

    const std::size_t n_probe = 8 + rng.index(5);
    for (std::size_t i = 0; i < n_probe; ++i) {
        geo::CommunitySite s;
        s.id = static_cast<std::int64_t>(5000 + i);
        s.center = random_point();
        fx.probes.push_back(s);
    }
    // Probe a real community frame too, where records cluster.
    if (!fx.communities.empty()) fx.probes.push_back(fx.communities[0]);
    return fx;
}

}  // namespace lucgen::testsupport
