#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "lucgen/errors.hpp"
#include "lucgen/rng.hpp"
#include "lucgen/scoring.hpp"

using namespace lucgen;
using namespace lucgen::forest;
using land::QualityLabel;
using num::SeededRng;

namespace {

// Dense plan using many categories vs sparse plan using few.
land::LandUseConfig rich_config(SeededRng& rng) {
    land::LandUseConfig c = land::make_config(20, 10);
    for (std::size_t i = 0; i < c.tensor.size(); ++i)
        if (rng.uniform() < 0.5) c.tensor[i] = 2.0 + rng.uniform() * 6.0;
    return c;
}

land::LandUseConfig poor_config(SeededRng& rng) {
    land::LandUseConfig c = land::make_config(20, 10);
    const std::size_t cats = 1 + rng.index(3);
    for (std::size_t k = 0; k < cats; ++k) {
        const std::size_t cat = rng.index(20);
        for (int j = 0; j < 6; ++j)
            c.tensor.at3(cat, rng.index(10), rng.index(10)) += 1.0;
    }
    return c;
}

struct Corpus {
    std::vector<std::vector<double>> x;
    std::vector<QualityLabel> y;
};

Corpus planted_corpus(std::uint64_t seed, int per_class) {
    SeededRng rng(seed);
    Corpus c;
    for (int i = 0; i < per_class; ++i) {
        c.x.push_back(scoring_features(rich_config(rng)));
        c.y.push_back(QualityLabel::Excellent);
        c.x.push_back(scoring_features(poor_config(rng)));
        c.y.push_back(QualityLabel::Terrible);
    }
    return c;
}

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

// ---- features --------------------------------------------------------------------

TEST_CASE("scoring features summarize the tensor") {
    CHECK(scoring_features(land::make_config(3, 2)) ==
          std::vector<double>{0.0, 0.0, 0.0, 0.0, 0.0});

    land::LandUseConfig uniform = land::make_config(4, 3);
    for (std::size_t i = 0; i < uniform.tensor.size(); ++i) uniform.tensor[i] = 2.0;
    const std::vector<double> u = scoring_features(uniform);
    CHECK(u[0] == 18.0);  // 9 cells x 2
    CHECK(u[4] == doctest::Approx(1.0).epsilon(1e-12));  // diversity
    CHECK(u[5] == 1.0);                                  // occupancy

    SeededRng rng(12);
    land::LandUseConfig random_cfg = land::make_config(5, 4);
    for (std::size_t i = 0; i < random_cfg.tensor.size(); ++i)
        if (rng.uniform() < 0.3) random_cfg.tensor[i] = rng.uniform() * 4.0;
    const std::vector<double> f = scoring_features(random_cfg);
    REQUIRE(f.size() == 7);
    for (int c = 0; c < 5; ++c) {
        double total = 0.0;
        for (int r = 0; r < 4; ++r)
            for (int col = 0; col < 4; ++col)
                total += random_cfg.tensor.at3(static_cast<std::size_t>(c),
                                               static_cast<std::size_t>(r),
                                               static_cast<std::size_t>(col));
        CHECK(f[static_cast<std::size_t>(c)] == total);
    }
    CHECK(f[5] == land::diversity(random_cfg));
    int occupied = 0;
    for (int r = 0; r < 4; ++r)
        for (int col = 0; col < 4; ++col) {
            double cell = 0.0;
            for (int c = 0; c < 5; ++c)
                cell += random_cfg.tensor.at3(static_cast<std::size_t>(c),
                                              static_cast<std::size_t>(r),
                                              static_cast<std::size_t>(col));
            if (cell > 0.0) ++occupied;
        }
    CHECK(f[6] == static_cast<double>(occupied) / 16.0);

    const std::vector<std::string> names = scoring_feature_names(5);
    REQUIRE(names.size() == 7);
    CHECK(names[0] == "cat_total_0");
    CHECK(names[5] == "diversity");
    CHECK(names[6] == "occupancy");
}

// ---- training --------------------------------------------------------------------

TEST_CASE("linearly separable data trains to perfect accuracy") {
    std::vector<std::vector<double>> x;
    std::vector<QualityLabel> y;
    for (int i = 0; i < 20; ++i) {
        x.push_back({static_cast<double>(i) * 0.05});  // 0 .. 0.95
        y.push_back(i < 10 ? QualityLabel::Terrible : QualityLabel::Excellent);
    }
    ForestConfig cfg;
    cfg.trees = 25;
    cfg.seed = 5;
    const RandomForestModel m = rf_train(x, y, cfg);
    CHECK(m.feature_count == 1);
    CHECK(m.config.mtry == 1);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double s = rf_score(m, x[i]);
        CHECK(land::label(s) == y[i]);
    }
}

TEST_CASE("depth cap zero yields majority stumps over each bootstrap") {
    const Corpus c = planted_corpus(21, 20);
    ForestConfig cfg;
    cfg.trees = 10;
    cfg.max_depth = 0;
    cfg.seed = 9;
    const RandomForestModel m = rf_train(c.x, c.y, cfg);
    REQUIRE(m.trees.size() == 10);
    for (std::size_t t = 0; t < m.trees.size(); ++t) {
        REQUIRE(m.trees[t].nodes.size() == 1);
        const TreeNode& leaf = m.trees[t].nodes[0];
        CHECK(leaf.is_leaf());
        const std::vector<std::size_t> boot = bootstrap_indices(cfg.seed, t, c.x.size());
        std::size_t n_e = 0;
        for (const std::size_t i : boot)
            if (c.y[i] == QualityLabel::Excellent) ++n_e;
        CHECK(leaf.p_excellent ==
              static_cast<double>(n_e) / static_cast<double>(boot.size()));
        CHECK(leaf.p_terrible + leaf.p_excellent == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("out-of-bag accuracy is high on the planted corpus") {
    const Corpus c = planted_corpus(33, 100);  // 200 samples
    ForestConfig cfg;
    cfg.seed = 7;
    const RandomForestModel m = rf_train(c.x, c.y, cfg);
    CHECK(m.config.mtry == 5);  // ceil(sqrt(22))
    CHECK(m.oob_accuracy >= 0.9);
}

TEST_CASE("training is deterministic and rejects degenerate input") {
    const Corpus c = planted_corpus(44, 15);
    ForestConfig cfg;
    cfg.trees = 12;
    cfg.seed = 3;
    const RandomForestModel a = rf_train(c.x, c.y, cfg);
    const RandomForestModel b = rf_train(c.x, c.y, cfg);
    REQUIRE(a.trees.size() == b.trees.size());
    for (std::size_t t = 0; t < a.trees.size(); ++t) {
        REQUIRE(a.trees[t].nodes.size() == b.trees[t].nodes.size());
        for (std::size_t n = 0; n < a.trees[t].nodes.size(); ++n) {
            CHECK(a.trees[t].nodes[n].feature == b.trees[t].nodes[n].feature);
            CHECK(a.trees[t].nodes[n].threshold == b.trees[t].nodes[n].threshold);
            CHECK(a.trees[t].nodes[n].p_excellent == b.trees[t].nodes[n].p_excellent);
        }
    }
    CHECK(a.oob_accuracy == b.oob_accuracy);

    std::vector<QualityLabel> single(c.y.size(), QualityLabel::Excellent);
    CHECK_THROWS_AS(rf_train(c.x, single, cfg), PreconditionError);
    CHECK_THROWS_AS(rf_train({}, {}, cfg), PreconditionError);
    std::vector<std::vector<double>> ragged{{1.0, 2.0}, {1.0}};
    std::vector<QualityLabel> two{QualityLabel::Excellent, QualityLabel::Terrible};
    CHECK_THROWS_AS(rf_train(ragged, two, cfg), ShapeError);
    ForestConfig bad = cfg;
    bad.min_leaf = 0;
    CHECK_THROWS_AS(rf_train(c.x, c.y, bad), PreconditionError);
}

TEST_CASE("unbounded depth with min leaf one fits each bootstrap perfectly") {
    const Corpus c = planted_corpus(55, 25);
    ForestConfig cfg;
    cfg.trees = 8;
    cfg.max_depth = 64;
    cfg.min_leaf = 1;
    cfg.seed = 13;
    const RandomForestModel m = rf_train(c.x, c.y, cfg);
    for (std::size_t t = 0; t < m.trees.size(); ++t) {
        const std::vector<std::size_t> boot = bootstrap_indices(cfg.seed, t, c.x.size());
        for (const std::size_t i : boot) {
            const double p = tree_predict(m.trees[t], c.x[i]);
            CHECK((c.y[i] == QualityLabel::Excellent ? p == 1.0 : p == 0.0));
        }
    }
}

// ---- scoring ---------------------------------------------------------------------

TEST_CASE("scores live in [0,1] and ignore tree order") {
    const Corpus c = planted_corpus(66, 30);
    ForestConfig cfg;
    cfg.trees = 40;
    cfg.seed = 17;
    RandomForestModel m = rf_train(c.x, c.y, cfg);
    SeededRng rng(2);
    std::vector<double> scores;
    for (const auto& x : c.x) {
        const double s = rf_score(m, x);
        CHECK(s >= 0.0);
        CHECK(s <= 1.0);
        scores.push_back(s);
    }
    // Shuffle the trees; every score must be bitwise identical.
    RandomForestModel shuffled = m;
    for (std::size_t i = shuffled.trees.size(); i > 1; --i)
        std::swap(shuffled.trees[i - 1], shuffled.trees[rng.index(i)]);
    for (std::size_t i = 0; i < c.x.size(); ++i)
        CHECK(rf_score(shuffled, c.x[i]) == scores[i]);

    CHECK_THROWS_AS(rf_score(m, std::vector<double>{1.0}), ShapeError);
}

TEST_CASE("a one-tree forest on separated data scores exactly zero or one") {
    std::vector<std::vector<double>> x;
    std::vector<QualityLabel> y;
    for (int i = 0; i < 8; ++i) {
        x.push_back({static_cast<double>(i)});
        y.push_back(i < 4 ? QualityLabel::Terrible : QualityLabel::Excellent);
    }
    ForestConfig cfg;
    cfg.trees = 1;
    cfg.min_leaf = 1;
    cfg.seed = 23;
    const RandomForestModel m = rf_train(x, y, cfg);
    const double lo = rf_score(m, std::vector<double>{-5.0});
    const double hi = rf_score(m, std::vector<double>{12.0});
    CHECK((lo == 0.0 || lo == 1.0));
    CHECK((hi == 0.0 || hi == 1.0));
    CHECK(lo <= hi);
}

TEST_CASE("config overload matches the feature-vector score") {
    const Corpus c = planted_corpus(77, 20);
    ForestConfig cfg;
    cfg.trees = 15;
    cfg.seed = 29;
    const RandomForestModel m = rf_train(c.x, c.y, cfg);
    SeededRng rng(31);
    const land::LandUseConfig sample = rich_config(rng);
    CHECK(rf_score(m, sample) == rf_score(m, scoring_features(sample)));
}

// ---- serialization ---------------------------------------------------------------

TEST_CASE("forest JSON round-trips bitwise") {
    const Corpus c = planted_corpus(88, 20);
    ForestConfig cfg;
    cfg.trees = 9;
    cfg.seed = 37;
    const RandomForestModel m = rf_train(c.x, c.y, cfg);
    const std::string p1 = temp_path("lucgen_test_forest1.json");
    const std::string p2 = temp_path("lucgen_test_forest2.json");
    write_forest_json(p1, m);
    const RandomForestModel back = read_forest_json(p1);
    CHECK(back.config.trees == m.config.trees);
    CHECK(back.config.seed == m.config.seed);
    CHECK(back.feature_count == m.feature_count);
    CHECK(back.oob_accuracy == m.oob_accuracy);
    write_forest_json(p2, back);
    CHECK(slurp(p1) == slurp(p2));
    for (const auto& x : c.x) CHECK(rf_score(back, x) == rf_score(m, x));
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}

TEST_CASE("forest JSON rejects malformed files") {
    const std::string path = temp_path("lucgen_test_forest_bad.json");
    {
        std::ofstream out(path);
        out << "{ not json";
    }
    CHECK_THROWS_AS(read_forest_json(path), IngestError);
    {
        std::ofstream out(path);
        out << R"({"format":"other-format"})";
    }
    CHECK_THROWS_AS(read_forest_json(path), IngestError);
    CHECK_THROWS_AS(read_forest_json(temp_path("lucgen_no_such_file.json")), IngestError);
    std::remove(path.c_str());
}
