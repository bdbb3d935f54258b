#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lucgen/landuse.hpp"

namespace lucgen::forest {

// ---- features --------------------------------------------------------------------

// Summary of a config tensor: per-category totals (m values), diversity, and
// occupancy (fraction of grid cells holding any count) — m+2 features.
std::vector<double> scoring_features(const land::LandUseConfig& cfg);
std::vector<std::string> scoring_feature_names(int categories);

// ---- model -----------------------------------------------------------------------

struct ForestConfig {
    int trees = 100;
    int max_depth = 8;
    int min_leaf = 2;
    int mtry = 0;  // features tried per split; 0 -> ceil(sqrt(feature_count))
    std::uint64_t seed = 0;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double p_terrible = 0.0;
    double p_excellent = 0.0;

    bool is_leaf() const { return feature < 0; }
};

// Root at index 0; samples with x[feature] <= threshold go left.
struct DecisionTree {
    std::vector<TreeNode> nodes;
};

struct RandomForestModel {
    ForestConfig config;
    int feature_count = 0;
    double oob_accuracy = 0.0;
    std::vector<DecisionTree> trees;
};

// ---- training --------------------------------------------------------------------

// The bootstrap draw for one tree — exposed so tests can reconstruct which
// samples a tree saw. Deterministic in (seed, tree, n).
std::vector<std::size_t> bootstrap_indices(std::uint64_t seed, std::size_t tree, std::size_t n);

// Trains `trees` CART trees on bootstrap samples: Gini-impurity splits over
// mtry randomly chosen features per node, midpoint thresholds between
// consecutive distinct values, ties broken toward the lowest feature index
// then the lowest threshold. Fills oob_accuracy from the out-of-bag votes.
// Throws PreconditionError unless both classes are present.
RandomForestModel rf_train(const std::vector<std::vector<double>>& samples,
                           const std::vector<land::QualityLabel>& labels,
                           const ForestConfig& cfg);

// ---- scoring ---------------------------------------------------------------------

// Probability of the excellent class at the leaf x lands in.
double tree_predict(const DecisionTree& tree, const std::vector<double>& x);

// Mean leaf probability over trees. The per-tree values are sorted before
// summation so the score is invariant to tree order, bitwise.
double rf_score(const RandomForestModel& model, const std::vector<double>& features);
double rf_score(const RandomForestModel& model, const land::LandUseConfig& cfg);

// ---- serialization ---------------------------------------------------------------

void write_forest_json(const std::string& path, const RandomForestModel& model);
RandomForestModel read_forest_json(const std::string& path);

} // namespace lucgen::forest
