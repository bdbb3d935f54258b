#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lucgen/geodata.hpp"
#include "lucgen/rng.hpp"

namespace lucgen::geo {

// Synthetic city generator. Communities sit on a dense grid with pitch equal
// to the frame side, so each community's eight context squares coincide with
// its neighbors' central squares — context features then derive from real
// neighbor content. A planted quality flag drives every intensity: vibrant
// ("excellent") communities get dense, diverse POIs, heavy check-in traffic
// and rising prices; the rest get sparse, narrow POIs, little traffic and
// flat-to-falling prices. The planted flags are the ground truth that
// labeling and scoring are measured against.
struct SynthConfig {
    std::uint64_t seed = 42;
    std::size_t communities = 2000;
    double excellent_fraction = 0.3;
    double side_m = 1000.0;
    int categories = 20;
    int months = 6;
    int days = 7;                      // activity spread over this many dates
    GeoPoint origin{0.0, 10.0};        // equatorial placement keeps the grid square

    double poi_mean_excellent = 3200.0;
    double poi_mean_terrible = 40.0;
    int terrible_max_categories = 5;   // terrible communities use 1..this many categories
    std::vector<double> category_weights;  // empty = uniform profile

    double cluster_fraction = 0.65;    // share of POIs drawn near category clusters
    int clusters_per_category = 3;
    double cluster_sigma_m = 120.0;

    double checkin_mean_excellent = 600.0;
    double checkin_mean_terrible = 30.0;

    double trips_mean = 40.0;
    double fares_mean = 40.0;
    double activity_boost_excellent = 3.0;

    double price_lo = 20000.0;
    double price_hi = 60000.0;
    double price_drift_excellent = 0.012;   // monthly relative trend
    double price_drift_terrible = -0.004;
    double price_noise = 0.004;
};

struct SynthCity {
    std::vector<CommunitySite> communities;
    std::vector<std::uint8_t> planted_excellent;  // aligned with communities
    std::vector<PoiRecord> pois;
    std::vector<TripRecord> trips;
    std::vector<FareRecord> fares;
    std::vector<CheckInRecord> checkins;
    std::vector<PriceObservation> prices;
};

SynthCity synth_city(const SynthConfig& cfg);

// Writes the six dataset files plus planted.csv (the ground-truth flags) into
// an existing directory.
void write_synth_csv(const SynthCity& city, const std::string& dir);

// Reads planted.csv back: community_id,planted rows, planted in {0,1}.
std::vector<std::pair<std::int64_t, int>> read_planted_csv(const std::string& path);

// Deterministic Poisson sampler pinned for reproducibility: Knuth's product
// method for small means, rounded normal approximation above 256.
std::int64_t poisson_draw(double mean, num::SeededRng& rng);

} // namespace lucgen::geo
