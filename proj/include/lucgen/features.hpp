#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lucgen/geodata.hpp"
#include "lucgen/tensor.hpp"

namespace lucgen::feat {

// Per-context feature families, one row per context square C1..C8:
//   V: first differences of the monthly mean house price (months-1 entries)
//   R: share of each POI category (categories entries, sums to 1 or all zero)
//   O: public transport  [daily boardings, daily alightings, daily internal
//                         rides, distinct stops per km^2, mean card balance]
//   U: private transport [daily leaving, daily arriving, daily internal trips,
//                         mean trip speed, mean trip distance]
// K = (months-1) + categories + 10 columns per row.

struct FeatureParams {
    int categories = 20;
    int months = 6;
    double side_m = 1000.0;
};

// First differences v[i] = means[i+1] - means[i]; an all-zero input stays zero.
std::vector<double> value_added_trend(const std::vector<double>& monthly_means);

// counts / total per category; an empty region yields the zero vector.
std::vector<double> poi_ratio(const std::vector<std::int64_t>& counts);

// Concatenates the four 8-row blocks column-wise into the 8 x K matrix.
// Throws ShapeError unless every block has exactly 8 rows.
num::Tensor assemble(const num::Tensor& V, const num::Tensor& R,
                     const num::Tensor& O, const num::Tensor& U);

// Uniform lat/lon bucket grid over a fixed point set. query() returns the
// indices of every point inside the closed rectangle, sorted ascending, so
// downstream accumulation visits records in dataset order.
class PointIndex {
public:
    PointIndex() = default;
    PointIndex(std::vector<geo::GeoPoint> pts, double cell_deg);

    std::vector<std::size_t> query(double lat_lo, double lat_hi,
                                   double lon_lo, double lon_hi) const;
    std::size_t size() const { return pts_.size(); }

private:
    std::size_t cell_of(double lat, double lon) const;

    std::vector<geo::GeoPoint> pts_;
    double lat0_ = 0.0, lon0_ = 0.0;
    double cell_lat_ = 1.0, cell_lon_ = 1.0;
    std::size_t nrows_ = 1, ncols_ = 1;
    std::vector<std::vector<std::size_t>> cells_;
};

// Extracts the 8 x K context feature matrix for any community frame, using
// bucket-grid indices over the city records. Owns copies of the records, so
// callers may hand it temporaries. Thread-safe once constructed;
// per-community extraction may run in parallel.
class FeatureExtractor {
public:
    FeatureExtractor(const std::vector<geo::CommunitySite>& communities,
                     std::vector<geo::PoiRecord> pois,
                     std::vector<geo::TripRecord> trips,
                     std::vector<geo::FareRecord> fares,
                     std::vector<geo::PriceObservation> prices,
                     const FeatureParams& params);

    int feature_count() const;  // K
    num::Tensor context_features(const geo::CommunitySite& site) const;  // 8 x K

private:
    std::vector<geo::PoiRecord> pois_;
    std::vector<geo::TripRecord> trips_;
    std::vector<geo::FareRecord> fares_;
    std::vector<geo::PriceObservation> prices_;
    FeatureParams params_;

    PointIndex poi_idx_;
    PointIndex trip_pick_idx_, trip_drop_idx_;
    PointIndex fare_board_idx_, fare_alight_idx_;
    // Price observations attach to community centers; observations whose
    // community id is unknown are dropped (they cannot be located).
    std::vector<std::size_t> price_obs_ids_;
    std::vector<geo::GeoPoint> price_pos_;
    PointIndex price_idx_;
    std::size_t fare_days_ = 1, trip_days_ = 1;
};

// Straight-line reference: scans every record for every context. Kept as the
// oracle the indexed extractor is checked against (results must match
// bit for bit).
namespace reference {
num::Tensor context_features(const std::vector<geo::CommunitySite>& communities,
                             const std::vector<geo::PoiRecord>& pois,
                             const std::vector<geo::TripRecord>& trips,
                             const std::vector<geo::FareRecord>& fares,
                             const std::vector<geo::PriceObservation>& prices,
                             const geo::CommunitySite& site,
                             const FeatureParams& params);
}  // namespace reference

// ---- standardization ---------------------------------------------------------

// Per-column z-scoring statistics pooled over every row of the corpus.
// Constant columns are stored as (mean 0, sigma 1) so they pass through.
struct FeatureScaler {
    std::vector<double> mean;
    std::vector<double> sigma;
};

FeatureScaler fit_scaler(const std::vector<num::Tensor>& corpus);
num::Tensor apply_scaler(const num::Tensor& x, const FeatureScaler& s);

// ---- persistence ---------------------------------------------------------------

std::vector<std::string> feature_names(int months, int categories);

struct FeatureTable {
    std::vector<std::int64_t> ids;
    std::vector<num::Tensor> matrices;  // one 8 x K matrix per id
};

void write_features_csv(const std::string& path,
                        const std::vector<std::int64_t>& ids,
                        const std::vector<num::Tensor>& matrices,
                        int months, int categories);
FeatureTable read_features_csv(const std::string& path, int months, int categories);

}  // namespace lucgen::feat
