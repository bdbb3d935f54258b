#include "lucgen/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "json.hpp"
#include "lucgen/csv.hpp"
#include "lucgen/errors.hpp"
#include "lucgen/features.hpp"
#include "lucgen/raster.hpp"

namespace lucgen::pipe {

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using num::SeededRng;
using num::Tensor;

// ---- seeds -----------------------------------------------------------------------

namespace {

// Every stage draws its own seed from the master seed, so stages can rerun
// independently without disturbing one another's randomness.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label) {
    return SeededRng(master).stream(label).seed();
}

[[noreturn]] void config_fail(const std::string& msg) {
    throw ConfigError("config: " + msg);
}

// ---- strict JSON field extraction ------------------------------------------------

class Fields {
public:
    Fields(ordered_json obj, std::string prefix)
        : obj_(std::move(obj)), prefix_(std::move(prefix)) {
        if (!obj_.is_object()) config_fail(prefix_ + " must be a JSON object");
    }

    double num(const char* key, double def, double lo, double hi) {
        mark(key);
        if (!obj_.contains(key)) return def;
        const auto& v = obj_.at(key);
        if (!v.is_number()) config_fail(where(key) + " must be a number");
        const double x = v.get<double>();
        if (!(x >= lo && x <= hi))
            config_fail(where(key) + " out of range [" + csv::fmt_fixed(lo, 6) + ", " +
                        csv::fmt_fixed(hi, 6) + "]");
        return x;
    }

    int integer(const char* key, int def, long long lo, long long hi) {
        mark(key);
        if (!obj_.contains(key)) return def;
        const auto& v = obj_.at(key);
        if (!v.is_number_integer()) config_fail(where(key) + " must be an integer");
        const long long x = v.get<long long>();
        if (x < lo || x > hi)
            config_fail(where(key) + " out of range [" + std::to_string(lo) + ", " +
                        std::to_string(hi) + "]");
        return static_cast<int>(x);
    }

    std::uint64_t uinteger(const char* key, std::uint64_t def) {
        mark(key);
        if (!obj_.contains(key)) return def;
        const auto& v = obj_.at(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
            config_fail(where(key) + " must be a non-negative integer");
        return v.get<std::uint64_t>();
    }

    std::string str(const char* key, const std::string& def) {
        mark(key);
        if (!obj_.contains(key)) return def;
        const auto& v = obj_.at(key);
        if (!v.is_string()) config_fail(where(key) + " must be a string");
        return v.get<std::string>();
    }

    bool present(const char* key) const { return obj_.contains(key); }

    ordered_json child(const char* key) {
        mark(key);
        if (!obj_.contains(key)) return ordered_json::object();
        return obj_.at(key);
    }

    // Every readable key must have been touched; anything else is a typo.
    void finish() const {
        for (auto it = obj_.begin(); it != obj_.end(); ++it)
            if (std::find(known_.begin(), known_.end(), it.key()) == known_.end())
                config_fail("unknown key " + prefix_ + "." + it.key());
    }

private:
    void mark(const char* key) { known_.emplace_back(key); }
    std::string where(const char* key) const { return prefix_ + "." + std::string(key); }

    ordered_json obj_;
    std::string prefix_;
    std::vector<std::string> known_;
};

// ---- artifact JSON helpers -------------------------------------------------------

ordered_json load_json_artifact(const std::string& path, const char* format) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open: " + path);
    ordered_json j;
    try {
        j = ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw IngestError(path + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("format") || !j.at("format").is_string() ||
        j.at("format").get<std::string>() != format)
        throw IngestError(path + ": expected a \"" + format + "\" file");
    return j;
}

void save_json_artifact(const std::string& path, const ordered_json& j) {
    std::ofstream out(path);
    if (!out) throw IngestError("cannot open for writing: " + path);
    out << j.dump(1) << '\n';
    if (!out) throw IngestError("short write: " + path);
}

ordered_json params_to_json(const num::ParamSet& params) {
    ordered_json out = ordered_json::object();
    for (std::size_t i = 0; i < params.count(); ++i) {
        const Tensor& t = params.value_at(i);
        out[params.name(i)] = {{"shape", t.shape()}, {"values", t.values()}};
    }
    return out;
}

num::ParamSet params_from_json(const ordered_json& j, const std::string& path) {
    if (!j.is_object()) throw IngestError(path + ": params must be an object");
    num::ParamSet params;
    try {
        for (const auto& [name, entry] : j.items()) {
            const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
            auto values = entry.at("values").get<std::vector<double>>();
            params.add(name, Tensor::of(shape, std::move(values)));
        }
    } catch (const nlohmann::json::exception& e) {
        throw IngestError(path + ": " + e.what());
    }
    return params;
}

void require_file(const std::string& path, const char* producer) {
    if (!fs::exists(path))
        throw IngestError("missing input: " + path + " (produced by `lucgen " +
                          std::string(producer) + "`)");
}

void note(const std::string& line) { std::cerr << "[lucgen] " << line << "\n"; }

// ---- shared-dimension resolution -------------------------------------------------

geo::SynthConfig resolved_synth(const RunConfig& cfg) {
    geo::SynthConfig s = cfg.synth;
    s.categories = cfg.categories;
    s.months = cfg.months;
    s.side_m = cfg.side_m;
    s.seed = derive_seed(cfg.seed, "synth");
    return s;
}

plan::GanConfig resolved_gan(const RunConfig& cfg) {
    plan::GanConfig g = cfg.gan;
    g.latent = cfg.vgae.latent;
    g.categories = cfg.categories;
    g.grid = cfg.grid;
    g.seed = derive_seed(cfg.seed, "gan");
    return g;
}

plan::VaeConfig resolved_vae(const RunConfig& cfg) {
    plan::VaeConfig v = cfg.vae;
    v.latent = cfg.vgae.latent;
    v.categories = cfg.categories;
    v.grid = cfg.grid;
    v.seed = derive_seed(cfg.seed, "vae");
    return v;
}

} // namespace

// ---- configuration ---------------------------------------------------------------

RunConfig default_config() { return RunConfig{}; }

void validate_config(const RunConfig& cfg) {
    if (!(cfg.side_m > 0.0) || cfg.side_m > 1e6) config_fail("frame.side_m out of range");
    if (cfg.grid < 1 || cfg.grid > 512) config_fail("frame.grid out of range");
    if (cfg.categories < 1 || cfg.categories > 1024) config_fail("frame.categories out of range");
    if (cfg.months < 2 || cfg.months > 600) config_fail("frame.months out of range");

    const geo::SynthConfig& s = cfg.synth;
    if (s.communities < 1 || s.communities > 2000000) config_fail("synth.communities out of range");
    if (s.excellent_fraction < 0.0 || s.excellent_fraction > 1.0)
        config_fail("synth.excellent_fraction out of range");
    if (s.days < 1 || s.days > 3650) config_fail("synth.days out of range");
    if (s.terrible_max_categories < 1 || s.terrible_max_categories > cfg.categories)
        config_fail("synth.terrible_max_categories out of range");
    if (!(s.price_lo > 0.0) || s.price_hi < s.price_lo) config_fail("synth price range invalid");

    if (cfg.vgae.hidden < 1 || cfg.vgae.hidden > 4096) config_fail("vgae.hidden out of range");
    if (cfg.vgae.latent < 1 || cfg.vgae.latent > 1024) config_fail("vgae.latent out of range");
    if (cfg.vgae.epochs < 1 || cfg.vgae.epochs > 100000) config_fail("vgae.epochs out of range");
    if (cfg.vgae.batch < 1) config_fail("vgae.batch out of range");
    if (!(cfg.vgae.adam.lr > 0.0) || cfg.vgae.adam.lr > 1.0)
        config_fail("vgae.learning_rate out of range");

    if (cfg.gan.hidden_g < 1 || cfg.gan.hidden_g > 8192) config_fail("gan.hidden_g out of range");
    if (cfg.gan.hidden_d < 1 || cfg.gan.hidden_d > 8192) config_fail("gan.hidden_d out of range");
    if (cfg.gan.batch < 1) config_fail("gan.batch out of range");
    if (cfg.gan.disc_steps < 1 || cfg.gan.disc_steps > 1000)
        config_fail("gan.disc_steps out of range");
    if (cfg.gan.iterations < 1 || cfg.gan.iterations > 10000000)
        config_fail("gan.iterations out of range");
    if (!(cfg.gan.adam.lr > 0.0) || cfg.gan.adam.lr > 1.0)
        config_fail("gan.learning_rate out of range");

    if (cfg.vae.hidden < 1 || cfg.vae.hidden > 8192) config_fail("vae.hidden out of range");
    if (cfg.vae.batch < 1) config_fail("vae.batch out of range");
    if (cfg.vae.epochs < 1 || cfg.vae.epochs > 100000) config_fail("vae.epochs out of range");
    if (!(cfg.vae.adam.lr > 0.0) || cfg.vae.adam.lr > 1.0)
        config_fail("vae.learning_rate out of range");

    if (cfg.forest.trees < 1 || cfg.forest.trees > 100000) config_fail("forest.trees out of range");
    if (cfg.forest.max_depth < 0 || cfg.forest.max_depth > 64)
        config_fail("forest.max_depth out of range");
    if (cfg.forest.min_leaf < 1) config_fail("forest.min_leaf out of range");
    if (cfg.forest.mtry < 0 || cfg.forest.mtry > cfg.categories + 2)
        config_fail("forest.mtry out of range");

    const ReportConfig& r = cfg.report;
    if (r.generate_count < 1 || r.generate_count > 1000000)
        config_fail("report.generate_count out of range");
    if (r.raster_scale < 1 || r.raster_scale > 256) config_fail("report.raster_scale out of range");
    if (r.raster_count < 0 || r.raster_count > 10000)
        config_fail("report.raster_count out of range");
    if (r.embed_export_per_side < 1 || r.embed_export_per_side > 10000000)
        config_fail("report.embed_export_per_side out of range");
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    ordered_json j;
    try {
        j = ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config parse error: " + std::string(e.what()));
    }

    RunConfig cfg = default_config();
    Fields top(j, "config");
    if (top.present("seed")) {
        cfg.seed = top.uinteger("seed", 0);
        cfg.has_seed = true;
    } else {
        top.uinteger("seed", 0);  // marks the key as known
    }
    cfg.out_dir = top.str("out_dir", cfg.out_dir);
    cfg.data_dir = top.str("data_dir", cfg.data_dir);

    {
        Fields f(top.child("frame"), "frame");
        cfg.side_m = f.num("side_m", cfg.side_m, 1.0, 1e6);
        cfg.grid = f.integer("grid", cfg.grid, 1, 512);
        cfg.categories = f.integer("categories", cfg.categories, 1, 1024);
        cfg.months = f.integer("months", cfg.months, 2, 600);
        f.finish();
    }
    {
        geo::SynthConfig& s = cfg.synth;
        Fields f(top.child("synth"), "synth");
        s.communities = static_cast<std::size_t>(
            f.integer("communities", static_cast<int>(s.communities), 1, 2000000));
        s.excellent_fraction = f.num("excellent_fraction", s.excellent_fraction, 0.0, 1.0);
        s.days = f.integer("days", s.days, 1, 3650);
        s.origin.lat = f.num("origin_lat", s.origin.lat, -80.0, 80.0);
        s.origin.lon = f.num("origin_lon", s.origin.lon, -179.0, 179.0);
        s.poi_mean_excellent = f.num("poi_mean_excellent", s.poi_mean_excellent, 0.0, 1e7);
        s.poi_mean_terrible = f.num("poi_mean_terrible", s.poi_mean_terrible, 0.0, 1e7);
        s.terrible_max_categories =
            f.integer("terrible_max_categories", s.terrible_max_categories, 1, 1024);
        s.cluster_fraction = f.num("cluster_fraction", s.cluster_fraction, 0.0, 1.0);
        s.clusters_per_category = f.integer("clusters_per_category", s.clusters_per_category, 0, 100);
        s.cluster_sigma_m = f.num("cluster_sigma_m", s.cluster_sigma_m, 0.0, 1e5);
        s.checkin_mean_excellent = f.num("checkin_mean_excellent", s.checkin_mean_excellent, 0.0, 1e7);
        s.checkin_mean_terrible = f.num("checkin_mean_terrible", s.checkin_mean_terrible, 0.0, 1e7);
        s.trips_mean = f.num("trips_mean", s.trips_mean, 0.0, 1e7);
        s.fares_mean = f.num("fares_mean", s.fares_mean, 0.0, 1e7);
        s.activity_boost_excellent = f.num("activity_boost_excellent", s.activity_boost_excellent, 0.0, 1e3);
        s.price_lo = f.num("price_lo", s.price_lo, 1.0, 1e9);
        s.price_hi = f.num("price_hi", s.price_hi, 1.0, 1e9);
        s.price_drift_excellent = f.num("price_drift_excellent", s.price_drift_excellent, -1.0, 1.0);
        s.price_drift_terrible = f.num("price_drift_terrible", s.price_drift_terrible, -1.0, 1.0);
        s.price_noise = f.num("price_noise", s.price_noise, 0.0, 1.0);
        f.finish();
    }
    {
        Fields f(top.child("vgae"), "vgae");
        cfg.vgae.hidden = f.integer("hidden", cfg.vgae.hidden, 1, 4096);
        cfg.vgae.latent = f.integer("latent", cfg.vgae.latent, 1, 1024);
        cfg.vgae.epochs = f.integer("epochs", cfg.vgae.epochs, 1, 100000);
        cfg.vgae.batch = f.integer("batch", cfg.vgae.batch, 1, 1000000);
        cfg.vgae.adam.lr = f.num("learning_rate", cfg.vgae.adam.lr, 1e-12, 1.0);
        const std::string pool = f.str("pool", "all9");
        if (pool == "all9")
            cfg.vgae.pool = graph::PoolSet::All9;
        else if (pool == "contexts8")
            cfg.vgae.pool = graph::PoolSet::Contexts8;
        else
            config_fail("vgae.pool must be \"all9\" or \"contexts8\"");
        f.finish();
    }
    {
        Fields f(top.child("gan"), "gan");
        cfg.gan.hidden_g = f.integer("hidden_g", cfg.gan.hidden_g, 1, 8192);
        cfg.gan.hidden_d = f.integer("hidden_d", cfg.gan.hidden_d, 1, 8192);
        cfg.gan.batch = f.integer("batch", cfg.gan.batch, 1, 1000000);
        cfg.gan.disc_steps = f.integer("disc_steps", cfg.gan.disc_steps, 1, 1000);
        cfg.gan.iterations = f.integer("iterations", cfg.gan.iterations, 1, 10000000);
        cfg.gan.adam.lr = f.num("learning_rate", cfg.gan.adam.lr, 1e-12, 1.0);
        const std::string mode = f.str("gen_loss", "saturating");
        if (mode == "saturating")
            cfg.gan.gen_loss = plan::GenLossMode::Saturating;
        else if (mode == "nonsaturating")
            cfg.gan.gen_loss = plan::GenLossMode::Nonsaturating;
        else
            config_fail("gan.gen_loss must be \"saturating\" or \"nonsaturating\"");
        f.finish();
    }
    {
        Fields f(top.child("vae"), "vae");
        cfg.vae.hidden = f.integer("hidden", cfg.vae.hidden, 1, 8192);
        cfg.vae.batch = f.integer("batch", cfg.vae.batch, 1, 1000000);
        cfg.vae.epochs = f.integer("epochs", cfg.vae.epochs, 1, 100000);
        cfg.vae.adam.lr = f.num("learning_rate", cfg.vae.adam.lr, 1e-12, 1.0);
        f.finish();
    }
    {
        Fields f(top.child("forest"), "forest");
        cfg.forest.trees = f.integer("trees", cfg.forest.trees, 1, 100000);
        cfg.forest.max_depth = f.integer("max_depth", cfg.forest.max_depth, 0, 64);
        cfg.forest.min_leaf = f.integer("min_leaf", cfg.forest.min_leaf, 1, 1000000);
        cfg.forest.mtry = f.integer("mtry", cfg.forest.mtry, 0, 100000);
        f.finish();
    }
    {
        Fields f(top.child("report"), "report");
        cfg.report.generate_count = f.integer("generate_count", cfg.report.generate_count, 1, 1000000);
        cfg.report.raster_scale = f.integer("raster_scale", cfg.report.raster_scale, 1, 256);
        cfg.report.raster_count = f.integer("raster_count", cfg.report.raster_count, 0, 10000);
        cfg.report.embed_export_per_side =
            f.integer("embed_export_per_side", cfg.report.embed_export_per_side, 1, 10000000);
        f.finish();
    }
    top.finish();
    validate_config(cfg);
    return cfg;
}

// ---- artifact layout -------------------------------------------------------------

OutPaths out_paths(const RunConfig& cfg) {
    OutPaths p;
    p.root = cfg.out_dir;
    p.data_dir = cfg.data_dir.empty() ? p.root + "/data" : cfg.data_dir;
    p.pois = p.data_dir + "/pois.csv";
    p.trips = p.data_dir + "/trips.csv";
    p.fares = p.data_dir + "/fares.csv";
    p.checkins = p.data_dir + "/checkins.csv";
    p.prices = p.data_dir + "/prices.csv";
    p.communities = p.data_dir + "/communities.csv";
    p.planted = p.data_dir + "/planted.csv";
    p.features_csv = p.root + "/features.csv";
    p.scaler_json = p.root + "/scaler.json";
    p.configs_csv = p.root + "/configs.csv";
    p.labels_csv = p.root + "/labels.csv";
    p.checkpoint_dir = p.root + "/checkpoints";
    p.vgae_json = p.checkpoint_dir + "/vgae.json";
    p.gan_json = p.checkpoint_dir + "/gan.json";
    p.vae_json = p.checkpoint_dir + "/vae.json";
    p.embeddings_all_csv = p.root + "/embeddings_all.csv";
    p.trainlog_csv = p.root + "/trainlog.csv";
    p.generated_dir = p.root + "/generated";
    p.manifest_csv = p.generated_dir + "/manifest.csv";
    p.rf_model_json = p.root + "/rf_model.json";
    p.scores_csv = p.root + "/scores.csv";
    p.benchmarks_csv = p.root + "/benchmarks.csv";
    p.proportions_csv = p.root + "/proportions.csv";
    p.embeddings_csv = p.root + "/embeddings.csv";
    return p;
}

// ---- persisted tables ------------------------------------------------------------

void write_configs_csv(const std::string& path, const ConfigTable& table) {
    if (table.ids.size() != table.configs.size())
        throw PreconditionError("configs: ids and configs differ in length");
    csv::Writer w(path, "community_id,channel,row,col,value");
    for (std::size_t i = 0; i < table.ids.size(); ++i) {
        const land::LandUseConfig& cfg = table.configs[i];
        land::check_config(cfg);
        const std::string id = std::to_string(table.ids[i]);
        const std::size_t m = cfg.tensor.dim(0);
        const std::size_t n = cfg.tensor.dim(1);
        for (std::size_t c = 0; c < m; ++c)
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t col = 0; col < n; ++col) {
                    const double v = cfg.tensor.at3(c, r, col);
                    if (v == 0.0) continue;
                    w.row(id + ',' + std::to_string(c) + ',' + std::to_string(r) + ',' +
                          std::to_string(col) + ',' + csv::fmt_exact(v));
                }
    }
}

ConfigTable read_configs_csv(const std::string& path, int categories, int grid) {
    csv::Reader reader(path, "community_id,channel,row,col,value");
    ConfigTable out;
    std::map<std::int64_t, std::size_t> slot;
    std::vector<std::string> f;
    while (reader.next(f)) {
        long long id = 0, c = 0, r = 0, col = 0;
        double v = 0.0;
        if (f.size() != 5 || !csv::parse_int64(f[0], id) || !csv::parse_int64(f[1], c) ||
            !csv::parse_int64(f[2], r) || !csv::parse_int64(f[3], col) ||
            !csv::parse_double(f[4], v))
            throw IngestError(path + ": malformed config row");
        if (c < 0 || c >= categories || r < 0 || r >= grid || col < 0 || col >= grid)
            throw IngestError(path + ": config index out of range");
        if (!std::isfinite(v) || v < 0.0)
            throw IngestError(path + ": config value must be finite and non-negative");
        auto it = slot.find(id);
        if (it == slot.end()) {
            it = slot.emplace(id, out.ids.size()).first;
            out.ids.push_back(id);
            out.configs.push_back(land::make_config(categories, grid));
        }
        out.configs[it->second].tensor.at3(static_cast<std::size_t>(c),
                                           static_cast<std::size_t>(r),
                                           static_cast<std::size_t>(col)) = v;
    }
    return out;
}

void write_labels_csv(const std::string& path, const LabelTable& table) {
    const std::size_t n = table.ids.size();
    if (table.checkins.size() != n || table.scores.size() != n || table.labels.size() != n)
        throw PreconditionError("labels: column lengths differ");
    csv::Writer w(path, "community_id,checkins,freq,diversity,q,label");
    for (std::size_t i = 0; i < n; ++i)
        w.row(std::to_string(table.ids[i]) + ',' + std::to_string(table.checkins[i]) + ',' +
              csv::fmt_exact(table.scores[i].freq) + ',' + csv::fmt_exact(table.scores[i].div) +
              ',' + csv::fmt_exact(table.scores[i].q) + ',' +
              land::label_name(table.labels[i]));
}

LabelTable read_labels_csv(const std::string& path) {
    csv::Reader reader(path, "community_id,checkins,freq,diversity,q,label");
    LabelTable out;
    std::vector<std::string> f;
    while (reader.next(f)) {
        long long id = 0, count = 0;
        land::QualityScore s;
        if (f.size() != 6 || !csv::parse_int64(f[0], id) || !csv::parse_int64(f[1], count) ||
            !csv::parse_double(f[2], s.freq) || !csv::parse_double(f[3], s.div) ||
            !csv::parse_double(f[4], s.q))
            throw IngestError(path + ": malformed label row");
        land::QualityLabel label;
        if (f[5] == "excellent")
            label = land::QualityLabel::Excellent;
        else if (f[5] == "terrible")
            label = land::QualityLabel::Terrible;
        else
            throw IngestError(path + ": unknown label " + f[5]);
        out.ids.push_back(id);
        out.checkins.push_back(count);
        out.scores.push_back(s);
        out.labels.push_back(label);
    }
    return out;
}

void write_scores_csv(const std::string& path, const std::vector<ScoreRow>& rows) {
    csv::Writer w(path, "method,samples,mean_score");
    for (const ScoreRow& r : rows)
        w.row(r.method + ',' + std::to_string(r.samples) + ',' + csv::fmt_exact(r.mean_score));
}

std::vector<ScoreRow> read_scores_csv(const std::string& path) {
    csv::Reader reader(path, "method,samples,mean_score");
    std::vector<ScoreRow> out;
    std::vector<std::string> f;
    while (reader.next(f)) {
        ScoreRow r;
        long long samples = 0;
        if (f.size() != 3 || f[0].empty() || !csv::parse_int64(f[1], samples) || samples < 0 ||
            !csv::parse_double(f[2], r.mean_score))
            throw IngestError(path + ": malformed score row");
        r.method = f[0];
        r.samples = static_cast<std::size_t>(samples);
        out.push_back(r);
    }
    return out;
}

// ---- stage helpers ---------------------------------------------------------------

namespace {

struct CityData {
    std::vector<geo::CommunitySite> communities;
    std::vector<geo::PoiRecord> pois;
    std::vector<geo::CheckInRecord> checkins;
};

feat::PointIndex index_points(std::vector<geo::GeoPoint> pts, double side_m) {
    return feat::PointIndex(std::move(pts), side_m / 111320.0);
}

// Records inside the community's 3L x 3L block, in dataset order.
template <typename Record>
std::vector<Record> block_subset(const std::vector<Record>& records,
                                 const feat::PointIndex& index, const geo::AreaFrame& frame) {
    double lat_lo, lat_hi, lon_lo, lon_hi;
    frame.block_bounds(lat_lo, lat_hi, lon_lo, lon_hi);
    std::vector<Record> out;
    for (const std::size_t i : index.query(lat_lo, lat_hi, lon_lo, lon_hi))
        out.push_back(records[i]);
    return out;
}

std::map<std::int64_t, std::size_t> id_index(const std::vector<std::int64_t>& ids,
                                             const std::string& what) {
    std::map<std::int64_t, std::size_t> out;
    for (std::size_t i = 0; i < ids.size(); ++i)
        if (!out.emplace(ids[i], i).second)
            throw IngestError(what + ": duplicate community id " + std::to_string(ids[i]));
    return out;
}

double mean_of(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    double sum = 0.0;
    for (const double x : xs) sum += x;
    return sum / static_cast<double>(xs.size());
}

struct ManifestRow {
    std::string method;
    int index = 0;
    std::string file;  // relative to the output root
    std::int64_t community_id = -1;
};

void write_manifest(const std::string& path, const std::vector<ManifestRow>& rows) {
    csv::Writer w(path, "method,index,file,community_id");
    for (const ManifestRow& r : rows)
        w.row(r.method + ',' + std::to_string(r.index) + ',' + r.file + ',' +
              std::to_string(r.community_id));
}

std::vector<ManifestRow> read_manifest(const std::string& path) {
    csv::Reader reader(path, "method,index,file,community_id");
    std::vector<ManifestRow> out;
    std::vector<std::string> f;
    while (reader.next(f)) {
        ManifestRow r;
        long long index = 0, id = 0;
        if (f.size() != 4 || f[0].empty() || !csv::parse_int64(f[1], index) || f[2].empty() ||
            !csv::parse_int64(f[3], id))
            throw IngestError(path + ": malformed manifest row");
        r.method = f[0];
        r.index = static_cast<int>(index);
        r.file = f[2];
        r.community_id = id;
        out.push_back(r);
    }
    return out;
}

} // namespace

// ---- stages ----------------------------------------------------------------------

void stage_synth(const RunConfig& cfg) {
    const OutPaths p = out_paths(cfg);
    fs::create_directories(p.data_dir);
    const geo::SynthCity city = geo::synth_city(resolved_synth(cfg));
    geo::write_synth_csv(city, p.data_dir);
    note("synth: " + std::to_string(city.communities.size()) + " communities, " +
         std::to_string(city.pois.size()) + " pois, " + std::to_string(city.checkins.size()) +
         " checkins -> " + p.data_dir);
}

void stage_featurize(const RunConfig& cfg) {
    const OutPaths p = out_paths(cfg);
    for (const std::string* f : {&p.pois, &p.trips, &p.fares, &p.prices, &p.communities})
        require_file(*f, "synth");
    const auto comms = geo::ingest_communities(p.communities);
    if (comms.records.empty()) throw IngestError(p.communities + ": no communities");
    const auto pois = geo::ingest_pois(p.pois, cfg.categories);
    const auto trips = geo::ingest_trips(p.trips);
    const auto fares = geo::ingest_fares(p.fares);
    const auto prices = geo::ingest_prices(p.prices, cfg.months);

    const feat::FeatureParams params{cfg.categories, cfg.months, cfg.side_m};
    const feat::FeatureExtractor extractor(comms.records, pois.records, trips.records,
                                           fares.records, prices.records, params);
    const std::size_t n = comms.records.size();
    std::vector<Tensor> matrices(n);
    std::vector<std::int64_t> ids(n);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
        const auto idx = static_cast<std::size_t>(i);
        ids[idx] = comms.records[idx].id;
        matrices[idx] = extractor.context_features(comms.records[idx]);
    }
    fs::create_directories(p.root);
    feat::write_features_csv(p.features_csv, ids, matrices, cfg.months, cfg.categories);

    const feat::FeatureScaler scaler = feat::fit_scaler(matrices);
    ordered_json sj;
    sj["format"] = "lucgen-scaler-1";
    sj["mean"] = scaler.mean;
    sj["sigma"] = scaler.sigma;
    save_json_artifact(p.scaler_json, sj);

    // Observed land-use tensors for the central squares.
    std::vector<geo::GeoPoint> poi_pos;
    poi_pos.reserve(pois.records.size());
    for (const auto& r : pois.records) poi_pos.push_back(r.pos);
    const feat::PointIndex poi_index = index_points(std::move(poi_pos), cfg.side_m);

    ConfigTable table;
    table.ids = ids;
    table.configs.resize(n);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
        const auto idx = static_cast<std::size_t>(i);
        const geo::AreaFrame frame = geo::make_frame(comms.records[idx], cfg.side_m);
        const auto nearby = block_subset(pois.records, poi_index, frame);
        table.configs[idx] = land::build_config(nearby, frame, cfg.categories, cfg.grid);
    }
    write_configs_csv(p.configs_csv, table);
    note("featurize: " + std::to_string(n) + " communities, K=" +
         std::to_string(extractor.feature_count()) + " -> " + p.features_csv);
}

void stage_label(const RunConfig& cfg) {
    const OutPaths p = out_paths(cfg);
    require_file(p.communities, "synth");
    require_file(p.checkins, "synth");
    require_file(p.configs_csv, "featurize");
    const auto comms = geo::ingest_communities(p.communities);
    const auto checkins = geo::ingest_checkins(p.checkins);
    const ConfigTable configs = read_configs_csv(p.configs_csv, cfg.categories, cfg.grid);
    const auto config_of = id_index(configs.ids, p.configs_csv);

    std::vector<geo::GeoPoint> pos;
    pos.reserve(checkins.records.size());
    for (const auto& r : checkins.records) pos.push_back(r.pos);
    const feat::PointIndex checkin_index = index_points(std::move(pos), cfg.side_m);

    const std::size_t n = comms.records.size();
    LabelTable table;
    table.ids.resize(n);
    table.checkins.resize(n);
    table.scores.resize(n);
    table.labels.resize(n);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
        const auto idx = static_cast<std::size_t>(i);
        const geo::AreaFrame frame = geo::make_frame(comms.records[idx], cfg.side_m);
        const auto nearby = block_subset(checkins.records, checkin_index, frame);
        table.ids[idx] = comms.records[idx].id;
        table.checkins[idx] = land::checkin_count(nearby, frame);
    }
    land::CheckinStats stats;
    stats.min_count = *std::min_element(table.checkins.begin(), table.checkins.end());
    stats.max_count = *std::max_element(table.checkins.begin(), table.checkins.end());
    for (std::size_t i = 0; i < n; ++i) {
        const auto it = config_of.find(table.ids[i]);
        if (it == config_of.end())
            throw IngestError(p.configs_csv + ": no config for community " +
                              std::to_string(table.ids[i]));
        const double freq = land::checkin_frequency(table.checkins[i], stats);
        const double div = land::diversity(configs.configs[it->second]);
        table.scores[i] = land::quality(freq, div);
        table.labels[i] = land::label(table.scores[i].q);
    }
    write_labels_csv(p.labels_csv, table);
    std::size_t excellent = 0;
    for (const auto& l : table.labels)
        if (l == land::QualityLabel::Excellent) ++excellent;
    note("label: " + std::to_string(excellent) + "/" + std::to_string(n) +
         " excellent -> " + p.labels_csv);
}

void stage_embed(const RunConfig& cfg) {
    const OutPaths p = out_paths(cfg);
    require_file(p.features_csv, "featurize");
    require_file(p.scaler_json, "featurize");
    require_file(p.labels_csv, "label");
    const feat::FeatureTable ft = feat::read_features_csv(p.features_csv, cfg.months, cfg.categories);
    if (ft.ids.empty()) throw IngestError(p.features_csv + ": no feature rows");

    const ordered_json sj = load_json_artifact(p.scaler_json, "lucgen-scaler-1");
    feat::FeatureScaler scaler;
    try {
        scaler.mean = sj.at("mean").get<std::vector<double>>();
        scaler.sigma = sj.at("sigma").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw IngestError(p.scaler_json + ": " + e.what());
    }
    if (scaler.mean.size() != ft.matrices[0].cols() || scaler.sigma.size() != scaler.mean.size())
        throw IngestError(p.scaler_json + ": scaler width does not match the feature matrix");

    const LabelTable labels = read_labels_csv(p.labels_csv);
    const auto label_of = id_index(labels.ids, p.labels_csv);

    std::vector<graph::SpatialGraph> graphs;
    graphs.reserve(ft.ids.size());
    for (const Tensor& raw : ft.matrices)
        graphs.push_back(graph::build_graph(feat::apply_scaler(raw, scaler)));

    graph::VgaeModel model = graph::train_vgae(graphs, cfg.vgae, derive_seed(cfg.seed, "vgae"));

    fs::create_directories(p.checkpoint_dir);
    ordered_json cj;
    cj["format"] = "lucgen-vgae-1";
    cj["hidden"] = model.config.hidden;
    cj["latent"] = model.config.latent;
    cj["epochs"] = model.config.epochs;
    cj["batch"] = model.config.batch;
    cj["learning_rate"] = model.config.adam.lr;
    cj["pool"] = model.config.pool == graph::PoolSet::All9 ? "all9" : "contexts8";
    cj["feature_dim"] = model.feature_dim;
    cj["aborted"] = model.aborted;
    cj["epoch_loss"] = model.epoch_loss;
    cj["params"] = params_to_json(model.params);
    save_json_artifact(p.vgae_json, cj);
    if (model.aborted)
        throw NumericError("embedding training diverged; checkpoint " + p.vgae_json +
                           " holds the last finite parameters");

    graph::EmbeddingTable table;
    table.ids = ft.ids;
    for (std::size_t i = 0; i < graphs.size(); ++i) {
        const auto it = label_of.find(ft.ids[i]);
        if (it == label_of.end())
            throw IngestError(p.labels_csv + ": no label for community " +
                              std::to_string(ft.ids[i]));
        table.labels.push_back(land::label_name(labels.labels[it->second]));
        table.rows.push_back(
            graph::pool_embedding(graph::encode_mu(graphs[i], model.params), model.config.pool));
    }
    graph::write_embeddings_csv(p.embeddings_all_csv, table);
    note("embed: " + std::to_string(graphs.size()) + " communities, final loss " +
         csv::fmt_fixed(model.epoch_loss.empty() ? 0.0 : model.epoch_loss.back(), 4) + " -> " +
         p.embeddings_all_csv);
}

void stage_train_gan(const RunConfig& cfg) {
    const OutPaths p = out_paths(cfg);
    require_file(p.configs_csv, "featurize");
    require_file(p.labels_csv, "label");
    require_file(p.embeddings_all_csv, "embed");
    const ConfigTable configs = read_configs_csv(p.configs_csv, cfg.categories, cfg.grid);
    const LabelTable labels = read_labels_csv(p.labels_csv);
    const auto config_of = id_index(configs.ids, p.configs_csv);
    const graph::EmbeddingTable emb = graph::read_embeddings_csv(p.embeddings_all_csv, cfg.vgae.latent);

    std::vector<land::LandUseConfig> excellent, terrible;
    for (std::size_t i = 0; i < labels.ids.size(); ++i) {
        const auto it = config_of.find(labels.ids[i]);
        if (it == config_of.end())
            throw IngestError(p.configs_csv + ": no config for community " +
                              std::to_string(labels.ids[i]));
        (labels.labels[i] == land::QualityLabel::Excellent ? excellent : terrible)
            .push_back(configs.configs[it->second]);
    }
    if (excellent.empty()) throw IngestError("corpus has no excellent communities to learn from");
    if (terrible.empty()) throw IngestError("corpus has no terrible communities");

    Tensor z = Tensor::zeros({emb.rows.size(), static_cast<std::size_t>(cfg.vgae.latent)});
    for (std::size_t i = 0; i < emb.rows.size(); ++i)
        for (std::size_t j = 0; j < emb.rows[i].size(); ++j)
            z.at2(i, j) = emb.rows[i][j];

    const plan::GanConfig gc = resolved_gan(cfg);
    plan::GanModel model = plan::train_gan(excellent, terrible, z, gc);
    plan::write_trainlog_csv(p.trainlog_csv, model.log);

    fs::create_directories(p.checkpoint_dir);
    ordered_json gj;
    gj["format"] = "lucgen-gan-1";
    gj["latent"] = gc.latent;
    gj["categories"] = gc.categories;
    gj["grid"] = gc.grid;
    gj["hidden_g"] = gc.hidden_g;
    gj["hidden_d"] = gc.hidden_d;
    gj["batch"] = gc.batch;
    gj["disc_steps"] = gc.disc_steps;
    gj["iterations"] = gc.iterations;
    gj["gen_loss"] = plan::gen_loss_name(gc.gen_loss);
    gj["learning_rate"] = gc.adam.lr;
    gj["seed"] = gc.seed;
    gj["aborted"] = model.aborted;
    gj["g_params"] = params_to_json(model.g_params);
    gj["d_params"] = params_to_json(model.d_params);
    save_json_artifact(p.gan_json, gj);
    if (model.aborted)
        throw NumericError("adversarial training diverged; checkpoint " + p.gan_json +
                           " holds the last finite parameters");

    const plan::VaeConfig vc = resolved_vae(cfg);
    plan::VaeModel vae = plan::train_vae(excellent, vc);
    ordered_json vj;
    vj["format"] = "lucgen-vae-1";
    vj["latent"] = vc.latent;
    vj["categories"] = vc.categories;
    vj["grid"] = vc.grid;
    vj["hidden"] = vc.hidden;
    vj["batch"] = vc.batch;
    vj["epochs"] = vc.epochs;
    vj["learning_rate"] = vc.adam.lr;
    vj["seed"] = vc.seed;
    vj["aborted"] = vae.aborted;
    vj["epoch_loss"] = vae.epoch_loss;
    vj["params"] = params_to_json(vae.params);
    save_json_artifact(p.vae_json, vj);
    if (vae.aborted)
        throw NumericError("autoencoder training diverged; checkpoint " + p.vae_json +
                           " holds the last finite parameters");
    note("train-gan: " + std::to_string(excellent.size()) + " excellent vs " +
         std::to_string(terrible.size()) + " terrible, " + std::to_string(model.log.size()) +
         " iterations -> " + p.gan_json);
}

namespace {

plan::GanConfig gan_config_from_json(const ordered_json& j, const std::string& path) {
    plan::GanConfig gc;
    try {
        gc.latent = j.at("latent").get<int>();
        gc.categories = j.at("categories").get<int>();
        gc.grid = j.at("grid").get<int>();
        gc.hidden_g = j.at("hidden_g").get<int>();
        gc.hidden_d = j.at("hidden_d").get<int>();
        gc.batch = j.at("batch").get<int>();
        gc.disc_steps = j.at("disc_steps").get<int>();
        gc.iterations = j.at("iterations").get<int>();
        gc.gen_loss = j.at("gen_loss").get<std::string>() == "nonsaturating"
                          ? plan::GenLossMode::Nonsaturating
                          : plan::GenLossMode::Saturating;
        gc.adam.lr = j.at("learning_rate").get<double>();
        gc.seed = j.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw IngestError(path + ": " + e.what());
    }
    return gc;
}

plan::VaeModel vae_model_from_json(const ordered_json& j, const std::string& path) {
    plan::VaeModel vm;
    try {
        vm.config.latent = j.at("latent").get<int>();
        vm.config.categories = j.at("categories").get<int>();
        vm.config.grid = j.at("grid").get<int>();
        vm.config.hidden = j.at("hidden").get<int>();
        vm.config.batch = j.at("batch").get<int>();
        vm.config.epochs = j.at("epochs").get<int>();
        vm.config.adam.lr = j.at("learning_rate").get<double>();
        vm.config.seed = j.at("seed").get<std::uint64_t>();
        vm.epoch_loss = j.at("epoch_loss").get<std::vector<double>>();
        vm.aborted = j.at("aborted").get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw IngestError(path + ": " + e.what());
    }
    vm.enc = plan::make_vae_encoder(vm.config);
    vm.dec = plan::make_vae_decoder(vm.config);
    vm.params = params_from_json(j.at("params"), path);
    return vm;
}

} // namespace

void stage_generate(const RunConfig& cfg) {
    const OutPaths p = out_paths(cfg);
    require_file(p.gan_json, "train-gan");
    require_file(p.vae_json, "train-gan");
    require_file(p.embeddings_all_csv, "embed");
    require_file(p.labels_csv, "label");
    require_file(p.configs_csv, "featurize");

    const ordered_json gj = load_json_artifact(p.gan_json, "lucgen-gan-1");
    const plan::GanConfig gc = gan_config_from_json(gj, p.gan_json);
    const num::Mlp gen = plan::make_generator(gc);
    num::ParamSet g_params = params_from_json(gj.at("g_params"), p.gan_json);

    const plan::VaeModel vae = vae_model_from_json(load_json_artifact(p.vae_json, "lucgen-vae-1"),
                                                   p.vae_json);

    const graph::EmbeddingTable emb = graph::read_embeddings_csv(p.embeddings_all_csv, gc.latent);
    const LabelTable labels = read_labels_csv(p.labels_csv);
    const auto emb_of = id_index(emb.ids, p.embeddings_all_csv);
    const ConfigTable configs = read_configs_csv(p.configs_csv, cfg.categories, cfg.grid);
    const auto config_of = id_index(configs.ids, p.configs_csv);

    // Plans are generated for the communities that need replanning: the
    // terrible-labeled ones, in corpus order.
    std::vector<std::pair<std::int64_t, std::vector<double>>> targets;
    for (std::size_t i = 0; i < labels.ids.size(); ++i) {
        if (labels.labels[i] != land::QualityLabel::Terrible) continue;
        if (static_cast<int>(targets.size()) >= cfg.report.generate_count) break;
        const auto it = emb_of.find(labels.ids[i]);
        if (it == emb_of.end())
            throw IngestError(p.embeddings_all_csv + ": no embedding for community " +
                              std::to_string(labels.ids[i]));
        targets.emplace_back(labels.ids[i], emb.rows[it->second]);
    }
    if (targets.empty()) throw IngestError("no terrible communities to plan for");

    // Untrained control: the same architecture with freshly initialized
    // weights, so scores can be compared against "no training at all".
    num::ParamSet control_params;
    SeededRng control_rng(derive_seed(cfg.seed, "control"));
    gen.init_params(control_params, control_rng);

    std::vector<land::LandUseConfig> excellent;
    for (std::size_t i = 0; i < labels.ids.size(); ++i)
        if (labels.labels[i] == land::QualityLabel::Excellent)
            excellent.push_back(configs.configs[config_of.at(labels.ids[i])]);
    if (excellent.empty()) throw IngestError("corpus has no excellent communities");

    fs::create_directories(p.generated_dir);
    std::vector<ManifestRow> manifest;
    auto emit = [&](const std::string& method, int k, const land::LandUseConfig& plan_cfg,
                    std::int64_t community_id) {
        const std::string rel = "generated/" + method + "_" + std::to_string(k) + ".csv";
        land::write_config_csv(p.root + "/" + rel, plan_cfg);
        manifest.push_back({method, k, rel, community_id});
    };

    for (std::size_t k = 0; k < targets.size(); ++k) {
        const auto& [id, z] = targets[k];
        emit("lucgan", static_cast<int>(k),
             plan::generate(gen, g_params, z, gc.categories, gc.grid), id);
    }
    for (std::size_t k = 0; k < targets.size(); ++k)
        emit("vae", static_cast<int>(k), plan::vae_generate(vae, targets[k].second),
             targets[k].first);
    for (std::size_t k = 0; k < targets.size(); ++k)
        emit("control", static_cast<int>(k),
             plan::generate(gen, control_params, targets[k].second, gc.categories, gc.grid),
             targets[k].first);
    emit("avg", 0, plan::baseline_avg(excellent), -1);
    emit("max", 0, plan::baseline_max(excellent), -1);
    write_manifest(p.manifest_csv, manifest);
    note("generate: " + std::to_string(targets.size()) + " plans per method -> " +
         p.generated_dir);
}

void stage_score(const RunConfig& cfg) {
    const OutPaths p = out_paths(cfg);
    require_file(p.configs_csv, "featurize");
    require_file(p.labels_csv, "label");
    require_file(p.manifest_csv, "generate");
    const ConfigTable configs = read_configs_csv(p.configs_csv, cfg.categories, cfg.grid);
    const LabelTable labels = read_labels_csv(p.labels_csv);
    const auto config_of = id_index(configs.ids, p.configs_csv);

    std::vector<std::vector<double>> x;
    std::vector<land::QualityLabel> y;
    for (std::size_t i = 0; i < labels.ids.size(); ++i) {
        const auto it = config_of.find(labels.ids[i]);
        if (it == config_of.end())
            throw IngestError(p.configs_csv + ": no config for community " +
                              std::to_string(labels.ids[i]));
        x.push_back(forest::scoring_features(configs.configs[it->second]));
        y.push_back(labels.labels[i]);
    }
    forest::ForestConfig fc = cfg.forest;
    fc.seed = derive_seed(cfg.seed, "forest");
    const forest::RandomForestModel model = forest::rf_train(x, y, fc);
    forest::write_forest_json(p.rf_model_json, model);

    std::map<std::string, std::vector<double>> by_method;
    for (const ManifestRow& row : read_manifest(p.manifest_csv)) {
        const std::string file = p.root + "/" + row.file;
        require_file(file, "generate");
        const land::LandUseConfig plan_cfg = land::read_config_csv(file, cfg.categories, cfg.grid);
        by_method[row.method].push_back(forest::rf_score(model, plan_cfg));
    }
    const auto method_rows = [&](const std::vector<std::pair<std::string, std::string>>& order) {
        std::vector<ScoreRow> rows;
        for (const auto& [key, name] : order) {
            const auto it = by_method.find(key);
            if (it == by_method.end())
                throw IngestError(p.manifest_csv + ": no plans for method " + key);
            rows.push_back({name, it->second.size(), mean_of(it->second)});
        }
        return rows;
    };
    write_scores_csv(p.scores_csv, method_rows({{"lucgan", "LUCGAN"},
                                                {"vae", "VAE"},
                                                {"avg", "AVG"},
                                                {"max", "MAX"}}));

    std::vector<double> excellent_scores, terrible_scores;
    for (std::size_t i = 0; i < labels.ids.size(); ++i) {
        const double s = forest::rf_score(model, x[i]);
        (labels.labels[i] == land::QualityLabel::Excellent ? excellent_scores : terrible_scores)
            .push_back(s);
    }
    std::vector<ScoreRow> bench = method_rows({{"control", "CONTROL"}});
    bench.push_back({"EXCELLENT", excellent_scores.size(), mean_of(excellent_scores)});
    bench.push_back({"TERRIBLE", terrible_scores.size(), mean_of(terrible_scores)});
    write_scores_csv(p.benchmarks_csv, bench);
    note("score: forest oob accuracy " + csv::fmt_fixed(model.oob_accuracy, 4) + " -> " +
         p.scores_csv);
}

void stage_report(const RunConfig& cfg) {
    const OutPaths p = out_paths(cfg);
    require_file(p.manifest_csv, "generate");
    require_file(p.configs_csv, "featurize");
    require_file(p.labels_csv, "label");
    require_file(p.embeddings_all_csv, "embed");
    const std::vector<ManifestRow> manifest = read_manifest(p.manifest_csv);
    const ConfigTable configs = read_configs_csv(p.configs_csv, cfg.categories, cfg.grid);
    const LabelTable labels = read_labels_csv(p.labels_csv);
    const auto config_of = id_index(configs.ids, p.configs_csv);

    // Aggregate plan per method (element-wise sum), for the proportion rows.
    const std::vector<std::string> methods = {"lucgan", "vae", "avg", "max", "control"};
    std::map<std::string, land::LandUseConfig> aggregate;
    std::map<std::string, std::vector<std::string>> files;
    for (const ManifestRow& row : manifest) {
        const std::string file = p.root + "/" + row.file;
        require_file(file, "generate");
        const land::LandUseConfig plan_cfg = land::read_config_csv(file, cfg.categories, cfg.grid);
        auto it = aggregate.find(row.method);
        if (it == aggregate.end()) {
            aggregate.emplace(row.method, plan_cfg);
        } else {
            for (std::size_t i = 0; i < plan_cfg.tensor.size(); ++i)
                it->second.tensor[i] += plan_cfg.tensor[i];
        }
        files[row.method].push_back(file);
    }
    land::LandUseConfig excellent_sum = land::make_config(cfg.categories, cfg.grid);
    land::LandUseConfig terrible_sum = land::make_config(cfg.categories, cfg.grid);
    for (std::size_t i = 0; i < labels.ids.size(); ++i) {
        const auto it = config_of.find(labels.ids[i]);
        if (it == config_of.end()) continue;
        land::LandUseConfig& acc =
            labels.labels[i] == land::QualityLabel::Excellent ? excellent_sum : terrible_sum;
        for (std::size_t j = 0; j < acc.tensor.size(); ++j)
            acc.tensor[j] += configs.configs[it->second].tensor[j];
    }

    std::string header = "method";
    for (int c = 0; c < cfg.categories; ++c) header += ",p" + std::to_string(c);
    csv::Writer w(p.proportions_csv, header);
    const auto emit_proportions = [&](const std::string& name, const land::LandUseConfig& sum) {
        const std::vector<double> props = land::poi_proportions(sum);
        double total = 0.0;
        for (const double v : props) total += v;
        if (total == 0.0) return;  // nothing aggregated: no proportion row
        std::string line = name;
        for (const double v : props) line += "," + csv::fmt_exact(v);
        w.row(line);
    };
    const std::vector<std::pair<std::string, std::string>> display = {{"lucgan", "LUCGAN"},
                                                                      {"vae", "VAE"},
                                                                      {"avg", "AVG"},
                                                                      {"max", "MAX"},
                                                                      {"control", "CONTROL"}};
    for (const auto& [key, name] : display) {
        const auto it = aggregate.find(key);
        if (it != aggregate.end()) emit_proportions(name, it->second);
    }
    emit_proportions("EXCELLENT", excellent_sum);
    emit_proportions("TERRIBLE", terrible_sum);

    // Rasters for the leading plans of each method.
    for (const std::string& method : methods) {
        const auto it = files.find(method);
        if (it == files.end()) continue;
        const int count = std::min<int>(cfg.report.raster_count,
                                        static_cast<int>(it->second.size()));
        for (int k = 0; k < count; ++k) {
            const land::LandUseConfig plan_cfg =
                land::read_config_csv(it->second[static_cast<std::size_t>(k)], cfg.categories,
                                      cfg.grid);
            const std::string stem = method + "_" + std::to_string(k);
            raster::write_ppm(p.root + "/merged_" + stem + ".ppm",
                              raster::merged_map(land::merge_dominant(plan_cfg),
                                                 cfg.report.raster_scale));
            for (int c = 0; c < cfg.categories; ++c)
                raster::write_ppm(p.root + "/channel_" + stem + "_" + std::to_string(c) + ".ppm",
                                  raster::channel_heatmap(plan_cfg, c, cfg.report.raster_scale));
        }
    }

    // Embedding export for external projection: up to embed_export_per_side
    // rows per label, sampled without replacement, kept in corpus order.
    const graph::EmbeddingTable all = graph::read_embeddings_csv(p.embeddings_all_csv,
                                                                 cfg.vgae.latent);
    graph::EmbeddingTable out;
    const SeededRng sample_rng(derive_seed(cfg.seed, "embed-sample"));
    for (const char* side : {"excellent", "terrible"}) {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < all.ids.size(); ++i)
            if (all.labels[i] == side) rows.push_back(i);
        const std::size_t want =
            std::min(rows.size(), static_cast<std::size_t>(cfg.report.embed_export_per_side));
        SeededRng rng = sample_rng.stream(side);
        std::vector<std::size_t> picks = rng.sample_without_replacement(rows.size(), want);
        std::sort(picks.begin(), picks.end());
        for (const std::size_t k : picks) {
            out.ids.push_back(all.ids[rows[k]]);
            out.labels.push_back(all.labels[rows[k]]);
            out.rows.push_back(all.rows[rows[k]]);
        }
    }
    graph::write_embeddings_csv(p.embeddings_csv, out);
    note("report: proportions, rasters and " + std::to_string(out.ids.size()) +
         " embedding rows -> " + p.root);
}

// ---- dispatch --------------------------------------------------------------------

const std::vector<std::string>& stage_names() {
    static const std::vector<std::string> names = {"synth",     "featurize", "label",
                                                   "embed",     "train-gan", "generate",
                                                   "score",     "report"};
    return names;
}

void run(const std::string& command, const RunConfig& cfg) {
    if (!cfg.has_seed)
        throw ConfigError("seed is mandatory: set \"seed\" in the config file or pass --seed");
    if (cfg.out_dir.empty())
        throw ConfigError("output directory is required: set \"out_dir\" or pass --out");
    validate_config(cfg);

    using Stage = void (*)(const RunConfig&);
    static const std::vector<std::pair<std::string, Stage>> table = {
        {"synth", stage_synth},       {"featurize", stage_featurize},
        {"label", stage_label},       {"embed", stage_embed},
        {"train-gan", stage_train_gan}, {"generate", stage_generate},
        {"score", stage_score},       {"report", stage_report},
    };
    if (command == "all") {
        for (const auto& [name, fn] : table) fn(cfg);
        return;
    }
    for (const auto& [name, fn] : table)
        if (name == command) {
            fn(cfg);
            return;
        }
    std::string known = "all";
    for (const auto& [name, fn] : table) known += ", " + name;
    throw ConfigError("unknown command \"" + command + "\" (expected one of: " + known + ")");
}

} // namespace lucgen::pipe
