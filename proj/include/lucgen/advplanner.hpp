#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lucgen/landuse.hpp"
#include "lucgen/layers.hpp"
#include "lucgen/params.hpp"
#include "lucgen/rng.hpp"
#include "lucgen/tensor.hpp"

namespace lucgen::plan {

// ---- configuration ---------------------------------------------------------------

// Generator loss: the saturating form descends mean log(1 - D(G(z))); the
// nonsaturating switch descends -mean log D(G(z)) instead (same fixed point,
// stronger gradient early in training when the discriminator wins).
enum class GenLossMode { Saturating, Nonsaturating };

const char* gen_loss_name(GenLossMode mode);

struct GanConfig {
    int latent = 16;       // dimension of the context embedding fed to the generator
    int categories = 20;   // m
    int grid = 10;         // n
    int hidden_g = 128;
    int hidden_d = 128;
    int batch = 32;
    int disc_steps = 1;    // discriminator updates per generator update
    int iterations = 2000;
    GenLossMode gen_loss = GenLossMode::Saturating;
    std::uint64_t seed = 0;
    num::AdamHyper adam;

    std::size_t flat_dim() const {
        return static_cast<std::size_t>(categories) * static_cast<std::size_t>(grid) *
               static_cast<std::size_t>(grid);
    }
};

// Generator: latent -> hidden_g -> hidden_g -> m*n*n, relu hidden, softplus
// output (plans are non-negative). Parameter prefix "gen".
num::Mlp make_generator(const GanConfig& cfg);

// Discriminator: m*n*n -> hidden_d -> 1, relu hidden, sigmoid output (clamped
// away from 0/1 so the log losses stay finite). It reads log1p-transformed
// counts; the transform is applied inside discriminate(). Prefix "disc".
num::Mlp make_discriminator(const GanConfig& cfg);

// ---- batch plumbing --------------------------------------------------------------

// Rows are flattened config tensors in channel-major order.
num::Tensor flatten_configs(const std::vector<land::LandUseConfig>& set);
land::LandUseConfig unflatten_config(const num::Tensor& batch, std::size_t row,
                                     int categories, int grid);
num::Tensor gather_rows(const num::Tensor& src, const std::vector<std::size_t>& idx);

// ---- forward passes --------------------------------------------------------------

struct DiscTrace {
    num::Tensor flat;  // raw counts batch
    num::Tensor u;     // log1p(flat)
    num::Mlp::Trace net;
};

// Scores in (0,1) for a batch of flattened configs, one column.
num::Tensor discriminate(const num::Mlp& disc, const num::ParamSet& params,
                         const num::Tensor& flat_batch, DiscTrace* trace);

// Backward from score gradients to the raw-count input; accumulates the
// discriminator's parameter gradients only when accumulate_params is true.
num::Tensor discriminate_backward(const num::Mlp& disc, num::ParamSet& params,
                                  const DiscTrace& trace, const num::Tensor& grad_scores,
                                  bool accumulate_params);

// Deterministic plan for one embedding.
land::LandUseConfig generate(const num::Mlp& gen, const num::ParamSet& g_params,
                             const std::vector<double>& z, int categories, int grid);

// ---- objectives ------------------------------------------------------------------

// Discriminator objective mean[log D(E) + log(1-D(F)) + log(1-D(T))] on fixed
// minibatches; the trainer ascends it. with_grads accumulates the objective's
// own gradient into the discriminator grad slots.
double d_objective(const num::Mlp& disc, num::ParamSet& d_params, const num::Tensor& e_flat,
                   const num::Tensor& f_flat, const num::Tensor& t_flat, bool with_grads,
                   double* mean_de = nullptr, double* mean_df = nullptr,
                   double* mean_dt = nullptr);

// Generator objective on a fixed embedding batch; the trainer descends it.
// The discriminator stays frozen (its grads untouched); with_grads accumulates
// into the generator grad slots.
double g_objective(const num::Mlp& gen, const num::Mlp& disc, num::ParamSet& g_params,
                   num::ParamSet& d_params, const num::Tensor& z_batch, GenLossMode mode,
                   bool with_grads, double* mean_dg = nullptr);

// ---- training --------------------------------------------------------------------

struct TrainLogRow {
    int iter = 0;        // 1-based
    double d_loss = 0.0;  // last discriminator step of the iteration, pre-update
    double g_loss = 0.0;  // generator step, pre-update
    double mean_de = 0.0;
    double mean_df = 0.0;
    double mean_dt = 0.0;
};

struct GanModel {
    num::Mlp gen;
    num::Mlp disc;
    num::ParamSet g_params;
    num::ParamSet d_params;
    GanConfig config;
    std::vector<TrainLogRow> log;
    bool aborted = false;  // divergence: params restored to the last finite iteration
};

// Alternating loop: disc_steps discriminator ascent steps (fresh excellent /
// embedding / terrible minibatches each), then one generator descent step.
// Minibatches draw without replacement when a set has at least `batch`
// members and with replacement otherwise. Deterministic given cfg.seed.
GanModel train_gan(const std::vector<land::LandUseConfig>& excellent,
                   const std::vector<land::LandUseConfig>& terrible,
                   const num::Tensor& embeddings, const GanConfig& cfg);

void write_trainlog_csv(const std::string& path, const std::vector<TrainLogRow>& log);

// ---- baselines -------------------------------------------------------------------

// Elementwise mean / max over a non-empty set of equally shaped configs.
land::LandUseConfig baseline_avg(const std::vector<land::LandUseConfig>& set);
land::LandUseConfig baseline_max(const std::vector<land::LandUseConfig>& set);

struct VaeConfig {
    int latent = 16;
    int categories = 20;
    int grid = 10;
    int hidden = 128;
    int batch = 32;
    int epochs = 200;
    std::uint64_t seed = 0;
    num::AdamHyper adam;

    std::size_t flat_dim() const {
        return static_cast<std::size_t>(categories) * static_cast<std::size_t>(grid) *
               static_cast<std::size_t>(grid);
    }
};

// Encoder flat -> hidden -> 2*latent (mu | logvar columns, prefix "vae-enc");
// decoder latent -> hidden -> flat with softplus output (prefix "vae-dec").
num::Mlp make_vae_encoder(const VaeConfig& cfg);
num::Mlp make_vae_decoder(const VaeConfig& cfg);

struct VaeModel {
    num::Mlp enc;  // flat -> hidden -> 2*latent (mu | logvar columns)
    num::Mlp dec;  // latent -> hidden -> flat, softplus output
    num::ParamSet params;
    VaeConfig config;
    std::vector<double> epoch_loss;
    bool aborted = false;
};

// Squared-error reconstruction plus KL toward the unit normal, batch mean;
// with_grads accumulates gradients for both encoder and decoder. eps supplies
// the reparameterization draw (batch x latent).
double vae_objective(const num::Mlp& enc, const num::Mlp& dec, num::ParamSet& params,
                     const num::Tensor& x_batch, const num::Tensor& eps, bool with_grads);

// Trains the autoencoding baseline on the excellent set. The latent width
// matches the context-embedding dimension so embeddings are decodable.
VaeModel train_vae(const std::vector<land::LandUseConfig>& excellent, const VaeConfig& cfg);

land::LandUseConfig vae_generate(const VaeModel& model, const std::vector<double>& z);

} // namespace lucgen::plan
