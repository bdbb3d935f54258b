#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <string>

#include "doctest.h"
#include "lucgen/csv.hpp"
#include "lucgen/errors.hpp"
#include "lucgen/pipeline.hpp"
#include "lucgen/raster.hpp"

using namespace lucgen;
namespace fs = std::filesystem;

namespace {

std::string temp_path(const char* name) {
    return (fs::temp_directory_path() / name).string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

std::string error_text(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        return e.what();
    }
    return "";
}

bool mentions(const std::string& text, const std::string& needle) {
    return text.find(needle) != std::string::npos;
}

pipe::RunConfig parse_config(const std::string& json) {
    const std::string path = temp_path("lucgen_pipe_cfg.json");
    spit(path, json);
    return pipe::load_config(path);
}

// One small end-to-end run shared by the artifact checks below.
pipe::RunConfig smoke_config() {
    pipe::RunConfig cfg = pipe::default_config();
    cfg.seed = 77;
    cfg.has_seed = true;
    cfg.out_dir = temp_path("lucgen_pipe_smoke");
    cfg.synth.communities = 60;
    cfg.vgae.epochs = 6;
    cfg.gan.iterations = 40;
    cfg.vae.epochs = 6;
    cfg.forest.trees = 20;
    cfg.report.generate_count = 4;
    cfg.report.raster_count = 1;
    cfg.report.embed_export_per_side = 10;
    return cfg;
}

const pipe::RunConfig& smoke() {
    static const pipe::RunConfig cfg = [] {
        pipe::RunConfig c = smoke_config();
        fs::remove_all(c.out_dir);
        pipe::run("all", c);
        return c;
    }();
    return cfg;
}

} // namespace

// ---- configuration ----------------------------------------------------------------

TEST_CASE("config loader applies defaults and nested overrides") {
    const pipe::RunConfig cfg = parse_config(R"({
        "seed": 9, "out_dir": "/tmp/x",
        "frame": {"grid": 8, "categories": 12, "months": 4, "side_m": 500},
        "synth": {"communities": 30, "excellent_fraction": 0.4},
        "vgae": {"latent": 5, "pool": "contexts8", "learning_rate": 0.002},
        "gan": {"iterations": 17, "gen_loss": "nonsaturating"},
        "vae": {"epochs": 3},
        "forest": {"trees": 11, "mtry": 2},
        "report": {"generate_count": 2}
    })");
    CHECK(cfg.has_seed);
    CHECK(cfg.seed == 9);
    CHECK(cfg.grid == 8);
    CHECK(cfg.categories == 12);
    CHECK(cfg.months == 4);
    CHECK(cfg.side_m == 500.0);
    CHECK(cfg.synth.communities == 30);
    CHECK(cfg.synth.excellent_fraction == 0.4);
    CHECK(cfg.vgae.latent == 5);
    CHECK(cfg.vgae.pool == graph::PoolSet::Contexts8);
    CHECK(cfg.vgae.adam.lr == 0.002);
    CHECK(cfg.gan.iterations == 17);
    CHECK(cfg.gan.gen_loss == plan::GenLossMode::Nonsaturating);
    CHECK(cfg.vae.epochs == 3);
    CHECK(cfg.forest.trees == 11);
    CHECK(cfg.forest.mtry == 2);
    CHECK(cfg.report.generate_count == 2);
    // untouched keys keep their defaults
    CHECK(cfg.vgae.hidden == 32);
    CHECK(cfg.gan.hidden_g == 128);
    CHECK(cfg.report.raster_scale == 16);

    const pipe::RunConfig bare = parse_config(R"({"out_dir": "/tmp/x"})");
    CHECK_FALSE(bare.has_seed);
    CHECK(bare.grid == 10);
    CHECK(bare.categories == 20);
}

TEST_CASE("config loader rejects unknown keys, bad types and bad ranges") {
    CHECK_THROWS_AS(parse_config("[1,2]"), ConfigError);
    CHECK_THROWS_AS(parse_config("{bad json"), ConfigError);
    CHECK_THROWS_AS((void)pipe::load_config(temp_path("lucgen_no_such_cfg.json")), ConfigError);

    CHECK(mentions(error_text([] { (void)parse_config(R"({"sed": 1})"); }), "config.sed"));
    CHECK(mentions(error_text([] { (void)parse_config(R"({"frame": {"gird": 4}})"); }),
                   "frame.gird"));
    CHECK(mentions(error_text([] { (void)parse_config(R"({"synth": {"pois": 4}})"); }),
                   "synth.pois"));

    CHECK_THROWS_AS(parse_config(R"({"seed": -3})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"frame": {"grid": 0}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"frame": {"months": 1}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"frame": {"grid": 2.5}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"vgae": {"pool": "middle"}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"vgae": {"learning_rate": 0}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"gan": {"gen_loss": "wasserstein"}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"gan": {"iterations": "many"}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"forest": {"max_depth": 99}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"report": {"raster_scale": 0}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"synth": {"excellent_fraction": 1.5}})"), ConfigError);

    // cross-field validation
    pipe::RunConfig cfg = pipe::default_config();
    cfg.synth.terrible_max_categories = cfg.categories + 1;
    CHECK_THROWS_AS(pipe::validate_config(cfg), ConfigError);
}

TEST_CASE("run dispatch validates command, seed and output directory") {
    pipe::RunConfig cfg = pipe::default_config();
    cfg.out_dir = temp_path("lucgen_pipe_nowhere");
    CHECK_THROWS_AS(pipe::run("synth", cfg), ConfigError);  // no seed
    cfg.seed = 5;
    cfg.has_seed = true;
    const std::string dir_err = error_text([&] {
        pipe::RunConfig c = cfg;
        c.out_dir.clear();
        pipe::run("synth", c);
    });
    CHECK(mentions(dir_err, "output directory"));
    const std::string cmd_err = error_text([&] { pipe::run("paint", cfg); });
    CHECK(mentions(cmd_err, "paint"));
    CHECK(mentions(cmd_err, "train-gan"));
    CHECK(pipe::stage_names().size() == 8);
}

TEST_CASE("missing inputs name the file and the producing stage") {
    pipe::RunConfig cfg = pipe::default_config();
    cfg.seed = 5;
    cfg.has_seed = true;
    cfg.out_dir = temp_path("lucgen_pipe_empty");
    fs::remove_all(cfg.out_dir);
    fs::create_directories(cfg.out_dir);

    const std::string feat_err = error_text([&] { pipe::stage_featurize(cfg); });
    CHECK(mentions(feat_err, "missing input"));
    CHECK(mentions(feat_err, "pois.csv"));
    CHECK(mentions(feat_err, "lucgen synth"));
    CHECK_THROWS_AS(pipe::stage_featurize(cfg), IngestError);
    CHECK(mentions(error_text([&] { pipe::stage_embed(cfg); }), "lucgen featurize"));
    CHECK(mentions(error_text([&] { pipe::stage_generate(cfg); }), "lucgen train-gan"));
    CHECK(mentions(error_text([&] { pipe::stage_score(cfg); }), "lucgen featurize"));
}

// ---- persisted tables ---------------------------------------------------------------

TEST_CASE("config table round-trips exactly and validates rows") {
    const std::string path = temp_path("lucgen_pipe_configs.csv");
    pipe::ConfigTable table;
    table.ids = {3, 11};
    table.configs.push_back(land::make_config(4, 3));
    table.configs.push_back(land::make_config(4, 3));
    table.configs[0].tensor.at3(0, 0, 0) = 2.0;
    table.configs[0].tensor.at3(3, 2, 2) = 0.1234567890123456789;
    table.configs[1].tensor.at3(1, 1, 2) = 7.0;
    pipe::write_configs_csv(path, table);

    const pipe::ConfigTable back = pipe::read_configs_csv(path, 4, 3);
    REQUIRE(back.ids == table.ids);
    for (std::size_t i = 0; i < table.configs.size(); ++i)
        CHECK(back.configs[i].tensor.values() == table.configs[i].tensor.values());

    spit(path, "community_id,channel,row,col,value\n1,4,0,0,1\n");
    CHECK_THROWS_AS((void)pipe::read_configs_csv(path, 4, 3), IngestError);
    spit(path, "community_id,channel,row,col,value\n1,0,0,0,-2\n");
    CHECK_THROWS_AS((void)pipe::read_configs_csv(path, 4, 3), IngestError);
    spit(path, "community_id,channel,row,col,value\n1,0,0,0\n");
    CHECK_THROWS_AS((void)pipe::read_configs_csv(path, 4, 3), IngestError);
    spit(path, "wrong,header\n");
    CHECK_THROWS_AS((void)pipe::read_configs_csv(path, 4, 3), IngestError);
}

TEST_CASE("label and score tables round-trip exactly and validate rows") {
    const std::string lpath = temp_path("lucgen_pipe_labels.csv");
    pipe::LabelTable labels;
    labels.ids = {0, 1};
    labels.checkins = {42, 7};
    labels.scores = {land::quality(0.9, 0.7), land::quality(0.1, 0.9)};
    labels.labels = {land::QualityLabel::Excellent, land::QualityLabel::Terrible};
    pipe::write_labels_csv(lpath, labels);
    const pipe::LabelTable lback = pipe::read_labels_csv(lpath);
    REQUIRE(lback.ids == labels.ids);
    CHECK(lback.checkins == labels.checkins);
    CHECK(lback.labels == labels.labels);
    for (std::size_t i = 0; i < labels.ids.size(); ++i) {
        CHECK(lback.scores[i].freq == labels.scores[i].freq);
        CHECK(lback.scores[i].div == labels.scores[i].div);
        CHECK(lback.scores[i].q == labels.scores[i].q);
    }
    spit(lpath, "community_id,checkins,freq,diversity,q,label\n1,2,0.5,0.5,0.5,meh\n");
    CHECK_THROWS_AS((void)pipe::read_labels_csv(lpath), IngestError);

    const std::string spath = temp_path("lucgen_pipe_scores.csv");
    const std::vector<pipe::ScoreRow> rows = {{"LUCGAN", 64, 0.98765432109876543},
                                              {"MAX", 1, 1.0}};
    pipe::write_scores_csv(spath, rows);
    const auto sback = pipe::read_scores_csv(spath);
    REQUIRE(sback.size() == 2);
    CHECK(sback[0].method == "LUCGAN");
    CHECK(sback[0].samples == 64);
    CHECK(sback[0].mean_score == rows[0].mean_score);
    CHECK(sback[1].method == "MAX");
    spit(spath, "method,samples,mean_score\nLUCGAN,x,0.5\n");
    CHECK_THROWS_AS((void)pipe::read_scores_csv(spath), IngestError);
    spit(spath, "method,samples,mean_score\nLUCGAN,-1,0.5\n");
    CHECK_THROWS_AS((void)pipe::read_scores_csv(spath), IngestError);
}

// ---- end-to-end artifacts -------------------------------------------------------------

TEST_CASE("small run produces the complete artifact set") {
    const pipe::OutPaths p = pipe::out_paths(smoke());
    for (const std::string* f :
         {&p.pois, &p.trips, &p.fares, &p.checkins, &p.prices, &p.communities, &p.planted,
          &p.features_csv, &p.scaler_json, &p.configs_csv, &p.labels_csv, &p.vgae_json,
          &p.gan_json, &p.vae_json, &p.embeddings_all_csv, &p.trainlog_csv, &p.manifest_csv,
          &p.rf_model_json, &p.scores_csv, &p.benchmarks_csv, &p.proportions_csv,
          &p.embeddings_csv})
        CHECK_MESSAGE(fs::exists(*f), *f);

    const std::string vgae = slurp(p.vgae_json);
    CHECK(mentions(vgae, "\"lucgen-vgae-1\""));
    CHECK(mentions(slurp(p.gan_json), "\"lucgen-gan-1\""));
    CHECK(mentions(slurp(p.vae_json), "\"lucgen-vae-1\""));

    const pipe::LabelTable labels = pipe::read_labels_csv(p.labels_csv);
    CHECK(labels.ids.size() == smoke().synth.communities);
    const pipe::ConfigTable configs =
        pipe::read_configs_csv(p.configs_csv, smoke().categories, smoke().grid);
    CHECK(configs.ids.size() == labels.ids.size());
}

TEST_CASE("quality rows in labels.csv obey the harmonic-mean rule") {
    const pipe::OutPaths p = pipe::out_paths(smoke());
    const pipe::LabelTable labels = pipe::read_labels_csv(p.labels_csv);
    std::size_t excellent = 0;
    for (std::size_t i = 0; i < labels.ids.size(); ++i) {
        const land::QualityScore& s = labels.scores[i];
        CHECK(land::quality(s.freq, s.div).q == s.q);
        CHECK(labels.labels[i] == land::label(s.q));
        if (labels.labels[i] == land::QualityLabel::Excellent) ++excellent;
    }
    CHECK(excellent > 0);
    CHECK(excellent < labels.ids.size());
}

TEST_CASE("score files cover the methods and stay in [0,1]") {
    const pipe::OutPaths p = pipe::out_paths(smoke());
    const auto scores = pipe::read_scores_csv(p.scores_csv);
    std::set<std::string> methods;
    for (const auto& r : scores) methods.insert(r.method);
    CHECK(methods == std::set<std::string>{"LUCGAN", "VAE", "AVG", "MAX"});
    for (const auto& r : scores) {
        CHECK(r.mean_score >= 0.0);
        CHECK(r.mean_score <= 1.0);
        if (r.method == "AVG" || r.method == "MAX")
            CHECK(r.samples == 1);
        else
            CHECK(r.samples == 4);  // generate_count
    }

    const auto bench = pipe::read_scores_csv(p.benchmarks_csv);
    std::set<std::string> refs;
    for (const auto& r : bench) refs.insert(r.method);
    CHECK(refs == std::set<std::string>{"CONTROL", "EXCELLENT", "TERRIBLE"});
    const pipe::LabelTable labels = pipe::read_labels_csv(p.labels_csv);
    for (const auto& r : bench) {
        CHECK(r.mean_score >= 0.0);
        CHECK(r.mean_score <= 1.0);
        if (r.method == "CONTROL") CHECK(r.samples == 4);
        if (r.method == "EXCELLENT") CHECK(r.samples > 0);
        if (r.method == "TERRIBLE") CHECK(r.samples + bench[1].samples <= labels.ids.size());
    }
}

TEST_CASE("proportion rows sum to one") {
    const pipe::OutPaths p = pipe::out_paths(smoke());
    csv::Reader reader(p.proportions_csv,
                       [&] {
                           std::string h = "method";
                           for (int c = 0; c < smoke().categories; ++c)
                               h += ",p" + std::to_string(c);
                           return h;
                       }());
    std::vector<std::string> f;
    std::set<std::string> methods;
    std::size_t rows = 0;
    while (reader.next(f)) {
        ++rows;
        REQUIRE(f.size() == static_cast<std::size_t>(smoke().categories) + 1);
        methods.insert(f[0]);
        double total = 0.0, v = 0.0;
        for (int c = 0; c < smoke().categories; ++c) {
            REQUIRE(csv::parse_double(f[static_cast<std::size_t>(c) + 1], v));
            CHECK(v >= 0.0);
            total += v;
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK(rows == 7);
    CHECK(methods == std::set<std::string>{"LUCGAN", "VAE", "AVG", "MAX", "CONTROL", "EXCELLENT",
                                           "TERRIBLE"});
}

TEST_CASE("generated plans are listed in the manifest and readable") {
    const pipe::RunConfig& cfg = smoke();
    const pipe::OutPaths p = pipe::out_paths(cfg);
    csv::Reader reader(p.manifest_csv, "method,index,file,community_id");
    std::vector<std::string> f;
    std::map<std::string, int> counts;
    while (reader.next(f)) {
        REQUIRE(f.size() == 4);
        ++counts[f[0]];
        const std::string file = p.root + "/" + f[2];
        REQUIRE(fs::exists(file));
        const land::LandUseConfig plan = land::read_config_csv(file, cfg.categories, cfg.grid);
        land::check_config(plan);
        if (f[0] == "avg" || f[0] == "max")
            CHECK(f[3] == "-1");
        else
            CHECK(f[3] != "-1");
    }
    CHECK(counts["lucgan"] == 4);
    CHECK(counts["vae"] == 4);
    CHECK(counts["control"] == 4);
    CHECK(counts["avg"] == 1);
    CHECK(counts["max"] == 1);
}

TEST_CASE("rasters exist for the leading plan of each method") {
    const pipe::RunConfig& cfg = smoke();
    const pipe::OutPaths p = pipe::out_paths(cfg);
    for (const char* method : {"lucgan", "vae", "avg", "max", "control"}) {
        const std::string merged = p.root + "/merged_" + method + "_0.ppm";
        REQUIRE(fs::exists(merged));
        const raster::Image img = raster::read_ppm(merged);
        CHECK(img.width == cfg.grid * cfg.report.raster_scale);
        CHECK(img.height == cfg.grid * cfg.report.raster_scale);
        CHECK(fs::exists(p.root + "/channel_" + method + "_0_0.ppm"));
        CHECK(fs::exists(p.root + "/channel_" + method + "_0_" +
                         std::to_string(cfg.categories - 1) + ".ppm"));
    }
}

TEST_CASE("embedding sample export honors the per-label cap") {
    const pipe::RunConfig& cfg = smoke();
    const pipe::OutPaths p = pipe::out_paths(cfg);
    const graph::EmbeddingTable sample = graph::read_embeddings_csv(p.embeddings_csv,
                                                                    cfg.vgae.latent);
    const graph::EmbeddingTable all = graph::read_embeddings_csv(p.embeddings_all_csv,
                                                                 cfg.vgae.latent);
    CHECK(all.ids.size() == cfg.synth.communities);

    std::map<std::int64_t, std::size_t> row_of;
    for (std::size_t i = 0; i < all.ids.size(); ++i) row_of[all.ids[i]] = i;
    std::size_t excellent = 0, terrible = 0;
    for (std::size_t i = 0; i < sample.ids.size(); ++i) {
        REQUIRE(row_of.count(sample.ids[i]) == 1);
        const std::size_t j = row_of[sample.ids[i]];
        CHECK(sample.labels[i] == all.labels[j]);
        CHECK(sample.rows[i] == all.rows[j]);
        (sample.labels[i] == "excellent" ? excellent : terrible) += 1;
    }
    const std::size_t cap = static_cast<std::size_t>(cfg.report.embed_export_per_side);
    std::size_t all_excellent = 0;
    for (const auto& l : all.labels)
        if (l == "excellent") ++all_excellent;
    CHECK(excellent == std::min(cap, all_excellent));
    CHECK(terrible == std::min(cap, all.ids.size() - all_excellent));
}

TEST_CASE("re-running the reporting stages is byte-identical") {
    const pipe::RunConfig& cfg = smoke();
    const pipe::OutPaths p = pipe::out_paths(cfg);
    const std::string manifest_before = slurp(p.manifest_csv);
    const std::string scores_before = slurp(p.scores_csv);
    const std::string proportions_before = slurp(p.proportions_csv);
    const std::string embeddings_before = slurp(p.embeddings_csv);
    pipe::stage_generate(cfg);
    pipe::stage_score(cfg);
    pipe::stage_report(cfg);
    CHECK(slurp(p.manifest_csv) == manifest_before);
    CHECK(slurp(p.scores_csv) == scores_before);
    CHECK(slurp(p.proportions_csv) == proportions_before);
    CHECK(slurp(p.embeddings_csv) == embeddings_before);
}

TEST_CASE("an external dataset directory is honored") {
    pipe::RunConfig cfg = smoke_config();
    cfg.synth.communities = 20;
    cfg.out_dir = temp_path("lucgen_pipe_split_out");
    cfg.data_dir = temp_path("lucgen_pipe_split_data");
    fs::remove_all(cfg.out_dir);
    fs::remove_all(cfg.data_dir);
    pipe::stage_synth(cfg);
    CHECK(fs::exists(cfg.data_dir + "/pois.csv"));
    CHECK_FALSE(fs::exists(cfg.out_dir + "/data"));
    pipe::stage_featurize(cfg);
    CHECK(fs::exists(cfg.out_dir + "/features.csv"));
}
