#include "lucgen/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "lucgen/errors.hpp"
#include "lucgen/rng.hpp"

namespace lucgen::forest {

using num::SeededRng;

// ---- features --------------------------------------------------------------------

std::vector<double> scoring_features(const land::LandUseConfig& cfg) {
    land::check_config(cfg);
    const std::size_t m = cfg.tensor.dim(0);
    const std::size_t cells = cfg.tensor.dim(1) * cfg.tensor.dim(2);
    std::vector<double> out(m + 2, 0.0);
    std::size_t occupied = 0;
    for (std::size_t i = 0; i < cells; ++i) {
        double cell_total = 0.0;
        for (std::size_t c = 0; c < m; ++c) {
            const double v = cfg.tensor[c * cells + i];
            out[c] += v;
            cell_total += v;
        }
        if (cell_total > 0.0) ++occupied;
    }
    out[m] = land::diversity(cfg);
    out[m + 1] = static_cast<double>(occupied) / static_cast<double>(cells);
    return out;
}

std::vector<std::string> scoring_feature_names(int categories) {
    std::vector<std::string> names;
    for (int c = 0; c < categories; ++c) names.push_back("cat_total_" + std::to_string(c));
    names.push_back("diversity");
    names.push_back("occupancy");
    return names;
}

// ---- training --------------------------------------------------------------------

std::vector<std::size_t> bootstrap_indices(std::uint64_t seed, std::size_t tree, std::size_t n) {
    SeededRng rng = SeededRng(seed).stream("tree", tree).stream("bootstrap");
    std::vector<std::size_t> idx(n);
    for (auto& v : idx) v = rng.index(n);
    return idx;
}

namespace {

struct SplitChoice {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double impurity = 0.0;  // weighted child Gini
};

double gini(std::size_t terrible, std::size_t excellent) {
    const std::size_t n = terrible + excellent;
    if (n == 0) return 0.0;
    const double pt = static_cast<double>(terrible) / static_cast<double>(n);
    const double pe = static_cast<double>(excellent) / static_cast<double>(n);
    return 1.0 - pt * pt - pe * pe;
}

struct TreeBuilder {
    const std::vector<std::vector<double>>& samples;
    const std::vector<land::QualityLabel>& labels;
    const ForestConfig& cfg;
    std::size_t feature_count;
    SeededRng mtry_rng;
    DecisionTree tree;

    // Candidate features for one node, ascending so the lowest-index
    // tie-break is independent of draw order.
    std::vector<std::size_t> draw_features() {
        const std::size_t k =
            std::min(feature_count, static_cast<std::size_t>(std::max(cfg.mtry, 1)));
        std::vector<std::size_t> f = mtry_rng.sample_without_replacement(feature_count, k);
        std::sort(f.begin(), f.end());
        return f;
    }

    SplitChoice best_split(const std::vector<std::size_t>& idx, double parent_gini) {
        SplitChoice best;
        const std::size_t n = idx.size();
        std::vector<std::pair<double, land::QualityLabel>> vals(n);
        for (const std::size_t feature : draw_features()) {
            for (std::size_t i = 0; i < n; ++i)
                vals[i] = {samples[idx[i]][feature], labels[idx[i]]};
            std::sort(vals.begin(), vals.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            std::size_t left_t = 0;
            std::size_t left_e = 0;
            std::size_t total_t = 0;
            std::size_t total_e = 0;
            for (const auto& [v, l] : vals)
                (l == land::QualityLabel::Terrible ? total_t : total_e) += 1;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                (vals[i].second == land::QualityLabel::Terrible ? left_t : left_e) += 1;
                if (vals[i].first == vals[i + 1].first) continue;  // no boundary here
                const std::size_t left_n = i + 1;
                const std::size_t right_n = n - left_n;
                if (left_n < static_cast<std::size_t>(cfg.min_leaf) ||
                    right_n < static_cast<std::size_t>(cfg.min_leaf))
                    continue;
                const double w =
                    (static_cast<double>(left_n) * gini(left_t, left_e) +
                     static_cast<double>(right_n) *
                         gini(total_t - left_t, total_e - left_e)) /
                    static_cast<double>(n);
                if (w >= parent_gini) continue;  // must strictly improve
                const double thr = (vals[i].first + vals[i + 1].first) / 2.0;
                const bool wins =
                    !best.found || w < best.impurity ||
                    (w == best.impurity && (static_cast<int>(feature) < best.feature ||
                                            (static_cast<int>(feature) == best.feature &&
                                             thr < best.threshold)));
                if (wins) {
                    best.found = true;
                    best.feature = static_cast<int>(feature);
                    best.threshold = thr;
                    best.impurity = w;
                }
            }
        }
        return best;
    }

    int build(const std::vector<std::size_t>& idx, int depth) {
        const int id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        std::size_t n_t = 0;
        std::size_t n_e = 0;
        for (const std::size_t i : idx)
            (labels[i] == land::QualityLabel::Terrible ? n_t : n_e) += 1;

        const double node_gini = gini(n_t, n_e);
        SplitChoice split;
        if (depth < cfg.max_depth && node_gini > 0.0 &&
            idx.size() >= 2 * static_cast<std::size_t>(cfg.min_leaf))
            split = best_split(idx, node_gini);

        if (!split.found) {
            TreeNode& leaf = tree.nodes[static_cast<std::size_t>(id)];
            leaf.p_terrible = static_cast<double>(n_t) / static_cast<double>(idx.size());
            leaf.p_excellent = static_cast<double>(n_e) / static_cast<double>(idx.size());
            return id;
        }

        std::vector<std::size_t> left_idx;
        std::vector<std::size_t> right_idx;
        for (const std::size_t i : idx)
            (samples[i][static_cast<std::size_t>(split.feature)] <= split.threshold ? left_idx
                                                                                    : right_idx)
                .push_back(i);
        const int left = build(left_idx, depth + 1);
        const int right = build(right_idx, depth + 1);
        TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
        node.feature = split.feature;
        node.threshold = split.threshold;
        node.left = left;
        node.right = right;
        return id;
    }
};

} // namespace

RandomForestModel rf_train(const std::vector<std::vector<double>>& samples,
                           const std::vector<land::QualityLabel>& labels,
                           const ForestConfig& cfg) {
    if (samples.empty() || samples.size() != labels.size())
        throw PreconditionError("forest: samples and labels must be non-empty and aligned");
    if (cfg.trees < 1) throw PreconditionError("forest: trees must be >= 1");
    if (cfg.max_depth < 0) throw PreconditionError("forest: max_depth must be >= 0");
    if (cfg.min_leaf < 1) throw PreconditionError("forest: min_leaf must be >= 1");
    const std::size_t f = samples.front().size();
    if (f == 0) throw PreconditionError("forest: empty feature vectors");
    for (const auto& s : samples)
        if (s.size() != f) throw ShapeError("forest: ragged feature matrix");
    bool has_t = false;
    bool has_e = false;
    for (const auto& l : labels)
        (l == land::QualityLabel::Terrible ? has_t : has_e) = true;
    if (!has_t || !has_e) throw PreconditionError("forest: training data has a single class");

    RandomForestModel model;
    model.config = cfg;
    if (model.config.mtry <= 0)
        model.config.mtry =
            static_cast<int>(std::ceil(std::sqrt(static_cast<double>(f))));
    model.feature_count = static_cast<int>(f);

    const std::size_t n = samples.size();
    std::vector<std::vector<bool>> in_bag(static_cast<std::size_t>(cfg.trees),
                                          std::vector<bool>(n, false));
    for (std::size_t t = 0; t < static_cast<std::size_t>(cfg.trees); ++t) {
        const std::vector<std::size_t> boot = bootstrap_indices(cfg.seed, t, n);
        for (const std::size_t i : boot) in_bag[t][i] = true;
        TreeBuilder builder{samples, labels, model.config, f,
                            SeededRng(cfg.seed).stream("tree", t).stream("mtry"),
                            DecisionTree{}};
        builder.build(boot, 0);
        model.trees.push_back(std::move(builder.tree));
    }

    // Out-of-bag vote: average the excluded trees' probabilities per sample.
    std::size_t counted = 0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> probs;
        for (std::size_t t = 0; t < model.trees.size(); ++t)
            if (!in_bag[t][i]) probs.push_back(tree_predict(model.trees[t], samples[i]));
        if (probs.empty()) continue;
        std::sort(probs.begin(), probs.end());
        double sum = 0.0;
        for (const double p : probs) sum += p;
        const land::QualityLabel vote = land::label(sum / static_cast<double>(probs.size()));
        ++counted;
        if (vote == labels[i]) ++correct;
    }
    model.oob_accuracy =
        counted == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(counted);
    return model;
}

// ---- scoring ---------------------------------------------------------------------

double tree_predict(const DecisionTree& tree, const std::vector<double>& x) {
    if (tree.nodes.empty()) throw PreconditionError("forest: empty tree");
    int id = 0;
    while (!tree.nodes[static_cast<std::size_t>(id)].is_leaf()) {
        const TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
        if (static_cast<std::size_t>(node.feature) >= x.size())
            throw ShapeError("forest: feature vector too short");
        id = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
    }
    return tree.nodes[static_cast<std::size_t>(id)].p_excellent;
}

double rf_score(const RandomForestModel& model, const std::vector<double>& features) {
    if (model.trees.empty()) throw PreconditionError("forest: model has no trees");
    if (features.size() != static_cast<std::size_t>(model.feature_count))
        throw ShapeError("forest: feature vector length mismatch");
    std::vector<double> probs;
    probs.reserve(model.trees.size());
    for (const auto& t : model.trees) probs.push_back(tree_predict(t, features));
    std::sort(probs.begin(), probs.end());
    double sum = 0.0;
    for (const double p : probs) sum += p;
    return sum / static_cast<double>(probs.size());
}

double rf_score(const RandomForestModel& model, const land::LandUseConfig& cfg) {
    return rf_score(model, scoring_features(cfg));
}

// ---- serialization ---------------------------------------------------------------

void write_forest_json(const std::string& path, const RandomForestModel& model) {
    nlohmann::ordered_json j;
    j["format"] = "lucgen-forest-1";
    j["config"] = {{"trees", model.config.trees},
                   {"max_depth", model.config.max_depth},
                   {"min_leaf", model.config.min_leaf},
                   {"mtry", model.config.mtry},
                   {"seed", model.config.seed}};
    j["feature_count"] = model.feature_count;
    j["oob_accuracy"] = model.oob_accuracy;
    nlohmann::ordered_json trees = nlohmann::ordered_json::array();
    for (const auto& t : model.trees) {
        nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
        for (const auto& n : t.nodes) {
            if (n.is_leaf())
                nodes.push_back({{"p", {n.p_terrible, n.p_excellent}}});
            else
                nodes.push_back({{"feature", n.feature},
                                 {"threshold", n.threshold},
                                 {"left", n.left},
                                 {"right", n.right}});
        }
        trees.push_back({{"nodes", std::move(nodes)}});
    }
    j["trees"] = std::move(trees);
    std::ofstream out(path);
    if (!out) throw IngestError(path + ": cannot open for writing");
    out << j.dump(1) << '\n';
}

RandomForestModel read_forest_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestError(path + ": cannot open");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IngestError(path + ": " + e.what());
    }
    RandomForestModel model;
    try {
        if (j.at("format") != "lucgen-forest-1")
            throw IngestError(path + ": unknown forest format");
        const auto& c = j.at("config");
        model.config.trees = c.at("trees").get<int>();
        model.config.max_depth = c.at("max_depth").get<int>();
        model.config.min_leaf = c.at("min_leaf").get<int>();
        model.config.mtry = c.at("mtry").get<int>();
        model.config.seed = c.at("seed").get<std::uint64_t>();
        model.feature_count = j.at("feature_count").get<int>();
        model.oob_accuracy = j.at("oob_accuracy").get<double>();
        for (const auto& jt : j.at("trees")) {
            DecisionTree tree;
            for (const auto& jn : jt.at("nodes")) {
                TreeNode node;
                if (jn.contains("p")) {
                    node.p_terrible = jn.at("p").at(0).get<double>();
                    node.p_excellent = jn.at("p").at(1).get<double>();
                } else {
                    node.feature = jn.at("feature").get<int>();
                    node.threshold = jn.at("threshold").get<double>();
                    node.left = jn.at("left").get<int>();
                    node.right = jn.at("right").get<int>();
                }
                tree.nodes.push_back(node);
            }
            model.trees.push_back(std::move(tree));
        }
    } catch (const nlohmann::json::exception& e) {
        throw IngestError(path + ": " + e.what());
    }
    return model;
}

} // namespace lucgen::forest
