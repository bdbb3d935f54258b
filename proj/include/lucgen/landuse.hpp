#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lucgen/geodata.hpp"
#include "lucgen/tensor.hpp"

namespace lucgen::land {

// ---- configuration tensor --------------------------------------------------------

// One land-use plan: an m-channel n×n stack of per-cell POI counts. Observed
// data holds non-negative integers; generated plans hold non-negative reals.
struct LandUseConfig {
    num::Tensor tensor;  // shape {m, n, n}

    int categories() const { return static_cast<int>(tensor.dim(0)); }
    int grid() const { return static_cast<int>(tensor.dim(1)); }
};

// Zero-filled m×n×n config.
LandUseConfig make_config(int categories, int grid);

// Throws ShapeError on a non-{m,n,n} tensor, DomainError on negative or
// non-finite entries.
void check_config(const LandUseConfig& cfg);

// Counts POIs of each category per central-square grid cell; POIs outside the
// central square are ignored.
LandUseConfig build_config(const std::vector<geo::PoiRecord>& pois,
                           const geo::AreaFrame& frame, int categories, int grid);

// ---- quality score ---------------------------------------------------------------

// Normalized Shannon entropy of the per-category totals, in [0,1]; a zero
// tensor (or a single-category config) scores 0.
double diversity(const LandUseConfig& cfg);

// Corpus-wide check-in count range used to normalize per-community counts.
struct CheckinStats {
    std::int64_t min_count = 0;
    std::int64_t max_count = 0;
};

std::int64_t checkin_count(const std::vector<geo::CheckInRecord>& checkins,
                           const geo::AreaFrame& frame);

// Min-max normalization of a count against the corpus range; a degenerate
// corpus (min == max) maps every count to 0.5.
double checkin_frequency(std::int64_t count, const CheckinStats& stats);
double checkin_frequency(const std::vector<geo::CheckInRecord>& checkins,
                         const geo::AreaFrame& frame, const CheckinStats& stats);

struct QualityScore {
    double freq = 0.0;
    double div = 0.0;
    double q = 0.0;
};

enum class QualityLabel { Terrible, Excellent };

// Harmonic-mean combination q = 2·freq·div/(freq+div); freq+div == 0 -> 0.
QualityScore quality(double freq, double div);
QualityLabel label(double q);  // excellent iff q > 0.5, strictly
const char* label_name(QualityLabel l);

// ---- report artifacts ------------------------------------------------------------

inline constexpr int kEmptyCell = -1;

// Per-cell dominant category codes, row-major; empty cells hold kEmptyCell.
struct CategoryMap {
    int grid = 0;
    std::vector<int> codes;

    int at(int r, int c) const {
        return codes[static_cast<std::size_t>(r) * static_cast<std::size_t>(grid) +
                     static_cast<std::size_t>(c)];
    }
};

// Argmax over channels per cell; ties resolve to the lowest category code.
CategoryMap merge_dominant(const LandUseConfig& cfg);

// Per-category totals over the grand total; zero tensor -> zero vector.
std::vector<double> poi_proportions(const LandUseConfig& cfg);

// ---- file format -----------------------------------------------------------------

// Sparse rows channel,row,col,value with zero entries omitted, channel-major.
void write_config_csv(const std::string& path, const LandUseConfig& cfg);
LandUseConfig read_config_csv(const std::string& path, int categories, int grid);

} // namespace lucgen::land
