#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lucgen/errors.hpp"
#include "lucgen/kernels.hpp"
#include "lucgen/pipeline.hpp"

namespace {

int fail(int code, const char* kind, const std::string& what) {
    std::cerr << "lucgen: " << kind << ": " << what << "\n";
    return code;
}

} // namespace

int main(int argc, char** argv) {
    lucgen::num::apply_thread_cap_from_env();

    CLI::App app{"land-use configuration pipeline"};
    app.require_subcommand(1);

    std::string config_path, out_dir, data_dir;
    std::uint64_t seed = 0;
    app.add_option("--config", config_path, "JSON run configuration file");
    CLI::Option* seed_opt =
        app.add_option("--seed", seed, "master seed (overrides the config file)");
    app.add_option("--out", out_dir, "output directory (overrides the config file)");
    app.add_option("--data", data_dir, "dataset directory (overrides the config file)");

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"all", "run every stage in order"},
        {"synth", "generate the synthetic city datasets"},
        {"featurize", "extract context features and observed land-use tensors"},
        {"label", "score communities and assign quality labels"},
        {"embed", "train the graph autoencoder and export embeddings"},
        {"train-gan", "train the adversarial planner and the autoencoder baseline"},
        {"generate", "produce plans for every method"},
        {"score", "train the scoring forest and rate the plans"},
        {"report", "write proportions, rasters and the embedding sample"},
    };
    for (const auto& [name, help] : commands)
        app.add_subcommand(name, help)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // usage errors exit 1, --help exits 0
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        lucgen::pipe::RunConfig cfg = config_path.empty()
                                          ? lucgen::pipe::default_config()
                                          : lucgen::pipe::load_config(config_path);
        if (seed_opt->count() > 0) {
            cfg.seed = seed;
            cfg.has_seed = true;
        }
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (!data_dir.empty()) cfg.data_dir = data_dir;
        lucgen::pipe::run(command, cfg);
        return 0;
    } catch (const lucgen::ConfigError& e) {
        return fail(1, "config", e.what());
    } catch (const lucgen::IngestError& e) {
        return fail(2, "ingest", e.what());
    } catch (const lucgen::NumericError& e) {
        return fail(3, "numeric", e.what());
    } catch (const lucgen::ShapeError& e) {
        return fail(1, "shape", e.what());
    } catch (const lucgen::DomainError& e) {
        return fail(1, "domain", e.what());
    } catch (const lucgen::PreconditionError& e) {
        return fail(1, "precondition", e.what());
    } catch (const std::exception& e) {
        return fail(1, "unexpected", e.what());
    }
}
