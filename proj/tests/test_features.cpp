#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <vector>

#include "lucgen/features.hpp"
#include "lucgen/geodata.hpp"
#include "lucgen/rng.hpp"
#include "lucgen/synth.hpp"
#include "support/fixtures.hpp"

using namespace lucgen;
using namespace lucgen::feat;
using namespace lucgen::geo;
using lucgen::num::SeededRng;
using lucgen::num::Tensor;

namespace {

CommunitySite site_at(double lat, double lon, std::int64_t id = 0) {
    CommunitySite s;
    s.id = id;
    s.center.lat = lat;
    s.center.lon = lon;
    return s;
}

Timestamp at_epoch(std::int64_t s) {
    Timestamp t;
    t.epoch_s = s;
    return t;
}

}  // namespace

TEST_CASE("price trend is the vector of first differences") {
    const std::vector<double> means = {10, 12, 11, 14, 14, 15};
    CHECK(value_added_trend(means) == std::vector<double>{2, -1, 3, 0, 1});
    CHECK(value_added_trend({7, 7, 7}) == std::vector<double>{0, 0});
    CHECK_THROWS_AS(value_added_trend({1.0}), PreconditionError);
}

TEST_CASE("poi ratios divide counts by the total") {
    const std::vector<double> r = poi_ratio({2, 2, 0, 0});
    CHECK(r == std::vector<double>{0.5, 0.5, 0.0, 0.0});
    std::vector<std::int64_t> one_hot(20, 0);
    one_hot[19] = 1;
    CHECK(poi_ratio(one_hot)[19] == 1.0);
    CHECK(poi_ratio({0, 0, 0}) == std::vector<double>{0, 0, 0});
    CHECK_THROWS_AS(poi_ratio({1, -1}), PreconditionError);
}

TEST_CASE("assemble concatenates blocks into 8 rows of K columns") {
    Tensor V = Tensor::full({8, 5}, 1.0);
    Tensor R = Tensor::full({8, 20}, 2.0);
    Tensor O = Tensor::full({8, 5}, 3.0);
    Tensor U = Tensor::full({8, 5}, 4.0);
    const Tensor F = assemble(V, R, O, U);
    CHECK(F.rows() == 8);
    CHECK(F.cols() == 35);
    CHECK(F.at2(3, 4) == 1.0);
    CHECK(F.at2(3, 5) == 2.0);
    CHECK(F.at2(3, 24) == 2.0);
    CHECK(F.at2(3, 25) == 3.0);
    CHECK(F.at2(3, 30) == 4.0);
    CHECK_THROWS_AS(assemble(Tensor::zeros({7, 5}), R, O, U), ShapeError);
}

TEST_CASE("bucket grid queries return exactly the points in the rectangle") {
    SeededRng rng(99);
    std::vector<GeoPoint> pts;
    for (int i = 0; i < 800; ++i) {
        GeoPoint p;
        p.lat = 10.0 + rng.uniform() * 0.1;
        p.lon = 20.0 + rng.uniform() * 0.1;
        pts.push_back(p);
    }
    const PointIndex idx(pts, 0.01);
    for (int q = 0; q < 50; ++q) {
        const double la = 10.0 + rng.uniform() * 0.1, lo = 20.0 + rng.uniform() * 0.1;
        const double lat_hi = la + rng.uniform() * 0.03, lon_hi = lo + rng.uniform() * 0.03;
        const auto got = idx.query(la, lat_hi, lo, lon_hi);
        std::vector<std::size_t> want;
        for (std::size_t i = 0; i < pts.size(); ++i)
            if (pts[i].lat >= la && pts[i].lat <= lat_hi && pts[i].lon >= lo && pts[i].lon <= lon_hi)
                want.push_back(i);
        CHECK(got == want);
    }
    CHECK(idx.query(50, 51, 20, 21).empty());
    CHECK(PointIndex({}, 0.01).query(0, 100, 0, 100).empty());
}

TEST_CASE("single in-to-out fare ride counts as one daily boarding") {
    const CommunitySite probe = site_at(10.0, 10.0);
    const AreaFrame frame = make_frame(probe, 1000.0);
    FareRecord f;
    f.board = frame.from_local(600.0, 0.0);     // inside the east context square
    f.alight = frame.from_local(9000.0, 0.0);   // far outside the block
    f.board_time = at_epoch(1700000000);
    f.alight_time = at_epoch(1700000600);
    f.balance = 42.0;

    FeatureParams params;
    const FeatureExtractor ex({}, {}, {}, {f}, {}, params);
    const Tensor F = ex.context_features(probe);
    const std::size_t east = 5 - 1;      // row of context C5
    const std::size_t o0 = 5 + 20;       // first O column for t=6, m=20
    CHECK(F.at2(east, o0 + 0) == 1.0);   // one boarding over one distinct day
    CHECK(F.at2(east, o0 + 1) == 0.0);   // no alightings inside
    CHECK(F.at2(east, o0 + 2) == 0.0);   // not an internal ride
    CHECK(F.at2(east, o0 + 3) == doctest::Approx(1.0));  // 1 stop in 1 km^2
    CHECK(F.at2(east, o0 + 4) == 42.0);  // balance mean over the touching ride
    // No other context sees the boarding.
    for (std::size_t r = 0; r < 8; ++r)
        if (r != east) CHECK(F.at2(r, o0 + 0) == 0.0);
}

TEST_CASE("trip speeds average over trips touching the region") {
    const CommunitySite probe = site_at(10.0, 10.0);
    const AreaFrame frame = make_frame(probe, 1000.0);
    TripRecord a;
    a.pickup = frame.from_local(600.0, 100.0);
    a.dropoff = frame.from_local(9000.0, 0.0);
    a.pickup_time = at_epoch(1700000000);
    a.dropoff_time = at_epoch(1700000900);
    a.distance_m = 3000.0;
    a.duration_s = 900.0;
    a.avg_kmh = 30.0;
    TripRecord b = a;
    b.pickup = frame.from_local(9000.0, 0.0);
    b.dropoff = frame.from_local(900.0, -400.0);
    b.distance_m = 5000.0;
    b.avg_kmh = 50.0;

    FeatureParams params;
    const FeatureExtractor ex({}, {}, {a, b}, {}, {}, params);
    const Tensor F = ex.context_features(probe);
    const std::size_t east = 5 - 1;
    const std::size_t u0 = 5 + 20 + 5;
    CHECK(F.at2(east, u0 + 0) == 1.0);                    // leaving
    CHECK(F.at2(east, u0 + 1) == 1.0);                    // arriving
    CHECK(F.at2(east, u0 + 2) == 0.0);                    // internal
    CHECK(F.at2(east, u0 + 3) == doctest::Approx(40.0));  // mean speed
    CHECK(F.at2(east, u0 + 4) == doctest::Approx(4000.0));
}

TEST_CASE("price trend uses only communities inside the context square") {
    const CommunitySite probe = site_at(10.0, 10.0);
    const AreaFrame frame = make_frame(probe, 1000.0);
    std::vector<CommunitySite> comms = {
        site_at(frame.from_local(700.0, 100.0).lat, frame.from_local(700.0, 100.0).lon, 1),
        site_at(frame.from_local(900.0, -200.0).lat, frame.from_local(900.0, -200.0).lon, 2),
        site_at(10.0, 10.0, 3),  // central square: not part of any context
    };
    FeatureParams params;
    params.months = 3;
    std::vector<PriceObservation> prices;
    auto obs = [&](std::int64_t id, int month, double price) {
        PriceObservation p;
        p.community_id = id;
        p.month = month;
        p.price = price;
        prices.push_back(p);
    };
    obs(1, 0, 10); obs(1, 1, 12); obs(1, 2, 11);
    obs(2, 0, 20); obs(2, 1, 14); obs(2, 2, 17);
    obs(3, 0, 999); obs(3, 1, 999); obs(3, 2, 999);

    const FeatureExtractor ex(comms, {}, {}, {}, prices, params);
    const Tensor F = ex.context_features(probe);
    const std::size_t east = 5 - 1;
    // Monthly means over communities 1 and 2: [15, 13, 14] -> diffs [-2, 1].
    CHECK(F.at2(east, 0) == doctest::Approx(-2.0));
    CHECK(F.at2(east, 1) == doctest::Approx(1.0));
    // A context square with no communities keeps a zero trend.
    CHECK(F.at2(0, 0) == 0.0);
    CHECK(F.at2(0, 1) == 0.0);
}

TEST_CASE("indexed extractor matches the full recount bit for bit") {
    for (std::uint64_t seed : {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}) {
        const auto fx = testsupport::make_feature_fixture(seed);
        const FeatureExtractor ex(fx.communities, fx.pois, fx.trips, fx.fares, fx.prices,
                                  fx.params);
        for (const auto& probe : fx.probes) {
            const Tensor fast = ex.context_features(probe);
            const Tensor slow = reference::context_features(
                fx.communities, fx.pois, fx.trips, fx.fares, fx.prices, probe, fx.params);
            REQUIRE(fast.values() == slow.values());
        }
    }
}

TEST_CASE("ratio rows sum to one or stay zero") {
    const auto fx = testsupport::make_feature_fixture(77);
    const FeatureExtractor ex(fx.communities, fx.pois, fx.trips, fx.fares, fx.prices, fx.params);
    const int t = fx.params.months, m = fx.params.categories;
    for (const auto& probe : fx.probes) {
        const Tensor F = ex.context_features(probe);
        for (std::size_t r = 0; r < 8; ++r) {
            double s = 0.0;
            bool all_zero = true;
            for (int j = 0; j < m; ++j) {
                const double v = F.at2(r, static_cast<std::size_t>(t - 1 + j));
                s += v;
                if (v != 0.0) all_zero = false;
            }
            if (!all_zero) CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("synthetic-city extraction matches the recount on every community") {
    SynthConfig cfg;
    cfg.communities = 16;
    cfg.seed = 5;
    cfg.poi_mean_excellent = 120.0;
    cfg.poi_mean_terrible = 25.0;
    cfg.trips_mean = 8.0;
    cfg.fares_mean = 8.0;
    cfg.checkin_mean_excellent = 10.0;
    cfg.checkin_mean_terrible = 3.0;
    const SynthCity city = synth_city(cfg);
    FeatureParams params;
    params.categories = cfg.categories;
    params.months = cfg.months;
    params.side_m = cfg.side_m;
    const FeatureExtractor ex(city.communities, city.pois, city.trips, city.fares, city.prices,
                              params);
    for (const auto& site : city.communities) {
        const Tensor fast = ex.context_features(site);
        const Tensor slow = reference::context_features(city.communities, city.pois, city.trips,
                                                        city.fares, city.prices, site, params);
        REQUIRE(fast.values() == slow.values());
    }
}

TEST_CASE("scaler standardizes the corpus and passes constant columns through") {
    SeededRng rng(123);
    std::vector<Tensor> corpus;
    for (int i = 0; i < 6; ++i) {
        Tensor x = Tensor::zeros({8, 12});
        for (auto& v : x.values()) v = rng.normal() * 3.0 + 5.0;
        for (std::size_t r = 0; r < 8; ++r) x.at2(r, 3) = 7.0;  // constant column
        corpus.push_back(x);
    }
    const FeatureScaler s = fit_scaler(corpus);
    for (double sd : s.sigma) CHECK(sd > 0.0);

    std::vector<double> mean(12, 0.0), var(12, 0.0);
    std::size_t n = 0;
    std::vector<Tensor> scaled;
    for (const auto& x : corpus) {
        scaled.push_back(apply_scaler(x, s));
        n += x.rows();
    }
    for (const auto& y : scaled)
        for (std::size_t r = 0; r < 8; ++r)
            for (std::size_t j = 0; j < 12; ++j) mean[j] += y.at2(r, j);
    for (auto& v : mean) v /= static_cast<double>(n);
    for (const auto& y : scaled)
        for (std::size_t r = 0; r < 8; ++r)
            for (std::size_t j = 0; j < 12; ++j) {
                const double d = y.at2(r, j) - mean[j];
                var[j] += d * d;
            }
    for (auto& v : var) v /= static_cast<double>(n);
    for (std::size_t j = 0; j < 12; ++j) {
        if (j == 3) continue;
        CHECK(std::abs(mean[j]) < 1e-9);
        CHECK(std::abs(var[j] - 1.0) < 1e-6);
    }
    // Constant column passes through bit for bit.
    for (std::size_t i = 0; i < corpus.size(); ++i)
        for (std::size_t r = 0; r < 8; ++r) CHECK(scaled[i].at2(r, 3) == 7.0);
    // Unscaling restores the input.
    for (std::size_t i = 0; i < corpus.size(); ++i)
        for (std::size_t r = 0; r < 8; ++r)
            for (std::size_t j = 0; j < 12; ++j) {
                const double back = scaled[i].at2(r, j) * s.sigma[j] + s.mean[j];
                CHECK(back == doctest::Approx(corpus[i].at2(r, j)).epsilon(1e-12));
            }
}

TEST_CASE("feature csv round-trips exactly") {
    SeededRng rng(55);
    std::vector<std::int64_t> ids = {4, 9};
    std::vector<Tensor> mats;
    for (int i = 0; i < 2; ++i) {
        Tensor x = Tensor::zeros({8, 35});
        for (auto& v : x.values()) v = rng.normal() * 1e-3 + (rng.uniform() - 0.5) * 1e6;
        mats.push_back(x);
    }
    const std::string path = "features_roundtrip_test.csv";
    write_features_csv(path, ids, mats, 6, 20);
    const FeatureTable t = read_features_csv(path, 6, 20);
    REQUIRE(t.ids == ids);
    REQUIRE(t.matrices.size() == 2);
    CHECK(t.matrices[0].values() == mats[0].values());
    CHECK(t.matrices[1].values() == mats[1].values());
    std::remove(path.c_str());
}

TEST_CASE("truncated feature csv is rejected") {
    const std::string path = "features_truncated_test.csv";
    {
        std::vector<std::int64_t> ids = {4};
        std::vector<Tensor> mats = {Tensor::full({8, 35}, 1.0)};
        write_features_csv(path, ids, mats, 6, 20);
        // Drop the final line.
        FILE* f = std::fopen(path.c_str(), "rb");
        REQUIRE(f);
        std::fseek(f, 0, SEEK_END);
        long size = std::ftell(f);
        std::string body(static_cast<std::size_t>(size), '\0');
        std::fseek(f, 0, SEEK_SET);
        REQUIRE(std::fread(body.data(), 1, body.size(), f) == body.size());
        std::fclose(f);
        body.erase(body.find_last_of('\n', body.size() - 2) + 1);
        f = std::fopen(path.c_str(), "wb");
        REQUIRE(f);
        REQUIRE(std::fwrite(body.data(), 1, body.size(), f) == body.size());
        std::fclose(f);
    }
    CHECK_THROWS_AS(read_features_csv(path, 6, 20), IngestError);
    std::remove(path.c_str());
}

TEST_CASE("feature extraction with no records yields zeros") {
    FeatureParams params;
    const FeatureExtractor ex({}, {}, {}, {}, {}, params);
    const Tensor F = ex.context_features(site_at(10, 10));
    CHECK(F.rows() == 8);
    CHECK(F.cols() == 35);
    for (double v : F.values()) CHECK(v == 0.0);
    CHECK(ex.feature_count() == 35);
}
