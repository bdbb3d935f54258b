#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lucgen/advplanner.hpp"
#include "lucgen/landuse.hpp"
#include "lucgen/scoring.hpp"
#include "lucgen/spatialgraph.hpp"
#include "lucgen/synth.hpp"

namespace lucgen::pipe {

// ---- run configuration -----------------------------------------------------------

// One JSON file drives every stage. Fields absent from the file keep the
// defaults below; unknown keys are rejected. The seed is mandatory (file or
// --seed flag) so every artifact is a pure function of (inputs, config, seed).
struct ReportConfig {
    int generate_count = 64;        // plans per generative method
    int raster_scale = 16;          // pixels per grid cell
    int raster_count = 1;           // leading plans per method to rasterize
    int embed_export_per_side = 500;  // sampled rows per label in embeddings.csv
};

struct RunConfig {
    std::uint64_t seed = 0;
    bool has_seed = false;
    std::string out_dir;
    std::string data_dir;  // optional external datasets; default <out_dir>/data

    // shared frame dimensions
    double side_m = 1000.0;  // L
    int grid = 10;           // n
    int categories = 20;     // m
    int months = 6;          // t

    geo::SynthConfig synth;
    graph::VgaeConfig vgae;
    plan::GanConfig gan;
    plan::VaeConfig vae;
    forest::ForestConfig forest;
    ReportConfig report;
};

RunConfig default_config();

// Parses and validates; throws ConfigError on unreadable files, malformed
// JSON, unknown keys, or out-of-range values. CLI overrides happen after
// loading, so the mandatory-seed check lives in run().
RunConfig load_config(const std::string& path);
void validate_config(const RunConfig& cfg);

// ---- artifact layout -------------------------------------------------------------

// Every stage reads and writes files under the output directory, so stages
// can rerun independently and in separate processes.
struct OutPaths {
    std::string root;

    std::string data_dir;  // honors RunConfig::data_dir for reads
    std::string pois, trips, fares, checkins, prices, communities, planted;

    std::string features_csv;   // raw 8 x K rows per community
    std::string scaler_json;    // corpus column means/sigmas
    std::string configs_csv;    // observed land-use tensors, sparse rows
    std::string labels_csv;     // per-community quality scores and labels
    std::string checkpoint_dir;
    std::string vgae_json, gan_json, vae_json;
    std::string embeddings_all_csv;  // every community, id,label,e0..e{d-1}
    std::string trainlog_csv;
    std::string generated_dir;
    std::string manifest_csv;  // method,index,file,community_id
    std::string rf_model_json;
    std::string scores_csv;      // method,samples,mean_score for the four methods
    std::string benchmarks_csv;  // control and corpus reference means
    std::string proportions_csv;
    std::string embeddings_csv;  // sampled export for external projection
};

OutPaths out_paths(const RunConfig& cfg);

// ---- persisted tables ------------------------------------------------------------

struct ConfigTable {
    std::vector<std::int64_t> ids;
    std::vector<land::LandUseConfig> configs;
};

void write_configs_csv(const std::string& path, const ConfigTable& table);
ConfigTable read_configs_csv(const std::string& path, int categories, int grid);

struct LabelTable {
    std::vector<std::int64_t> ids;
    std::vector<std::int64_t> checkins;
    std::vector<land::QualityScore> scores;
    std::vector<land::QualityLabel> labels;
};

void write_labels_csv(const std::string& path, const LabelTable& table);
LabelTable read_labels_csv(const std::string& path);

struct ScoreRow {
    std::string method;
    std::size_t samples = 0;
    double mean_score = 0.0;
};

void write_scores_csv(const std::string& path, const std::vector<ScoreRow>& rows);
std::vector<ScoreRow> read_scores_csv(const std::string& path);

// ---- stages ----------------------------------------------------------------------

// Stage order: synth -> featurize -> label -> embed -> train-gan -> generate
// -> score -> report. Each stage loads its inputs from files, throws
// IngestError (naming the path) when a required input is missing, and
// overwrites its own outputs deterministically.
void stage_synth(const RunConfig& cfg);
void stage_featurize(const RunConfig& cfg);
void stage_label(const RunConfig& cfg);
void stage_embed(const RunConfig& cfg);
void stage_train_gan(const RunConfig& cfg);
void stage_generate(const RunConfig& cfg);
void stage_score(const RunConfig& cfg);
void stage_report(const RunConfig& cfg);

// Dispatches one subcommand ("all" chains every stage in order). Throws
// ConfigError for unknown commands or a missing seed.
void run(const std::string& command, const RunConfig& cfg);

const std::vector<std::string>& stage_names();

} // namespace lucgen::pipe
