#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lucgen/params.hpp"
#include "lucgen/rng.hpp"
#include "lucgen/tensor.hpp"

namespace lucgen::graph {

// A community and its eight context squares as a 9-node attributed graph.
// Node 0 is the (unplanned) central area with all-zero attributes; nodes 1..8
// are the context squares C1..C8 carrying their feature rows.

enum class EdgePattern { StarOnly, RingOnly, StarPlusRing };
enum class PoolSet { All9, Contexts8 };

struct SpatialGraph {
    num::Tensor a;  // 9 x 9 symmetric 0/1 adjacency, zero diagonal
    num::Tensor x;  // 9 x K attributes, row 0 all zeros
};

// features must be 8 x K. Star edges connect the center to every context;
// the ring follows geographic adjacency C1-C2-C3-C5-C8-C7-C6-C4-C1.
SpatialGraph build_graph(const num::Tensor& features, EdgePattern pattern = EdgePattern::StarPlusRing);

// D^{-1/2} (A + I) D^{-1/2} with D the degree diagonal of A + I.
// A must be square, symmetric, 0/1, with zero diagonal.
num::Tensor normalize_adjacency(const num::Tensor& a);

struct VgaeConfig {
    int hidden = 32;
    int latent = 16;
    int epochs = 200;
    int batch = 32;
    num::AdamHyper adam;
    PoolSet pool = PoolSet::All9;
};

// Intermediate states of one encoder/decoder pass, kept for the backward pass.
struct VgaeTrace {
    num::Tensor ahat;    // 9 x 9
    num::Tensor p;       // ahat @ x
    num::Tensor s1;      // p @ W1 (pre-activation)
    num::Tensor xhat;    // relu(s1)
    num::Tensor q;       // ahat @ xhat
    num::Tensor mu;      // q @ Wmu
    num::Tensor logvar;  // q @ Wsig
    num::Tensor sigma;   // exp(logvar / 2), snapped to 0 below 1e-12
    num::Tensor eps;     // the noise actually used
    num::Tensor z;       // mu + sigma * eps
    num::Tensor zz;      // z @ z^T
    num::Tensor arec;    // sigmoid(zz)
};

// Parameter names registered by init: vgae.W1 (K x h), vgae.Wmu (h x d),
// vgae.Wsig (h x d). No bias terms.
void init_vgae_params(num::ParamSet& params, int feature_dim, const VgaeConfig& cfg,
                      const num::SeededRng& rng);

// Full pass with caller-supplied noise (9 x d); fills every trace field.
void vgae_forward(const SpatialGraph& g, const num::ParamSet& params, const num::Tensor& eps,
                  VgaeTrace& t);

// z = mu + exp(logvar/2) * eps; sigma below 1e-12 snaps to exactly 0.
num::Tensor reparameterize_with(const num::Tensor& mu, const num::Tensor& logvar,
                                const num::Tensor& eps);
num::Tensor reparameterize(const num::Tensor& mu, const num::Tensor& logvar, num::SeededRng& rng);

// sigmoid(z z^T); exactly symmetric.
num::Tensor decode(const num::Tensor& z);

// KL( N(mu, sigma^2) || N(0, I) ) summed over nodes and dims:
// sum 1/2 (mu^2 + exp(logvar) - 1 - logvar). Never negative.
double kl_term(const num::Tensor& mu, const num::Tensor& logvar);
// Squared reconstruction error against T = A + I.
double recon_term(const SpatialGraph& g, const num::Tensor& arec);
double vgae_loss(const SpatialGraph& g, const VgaeTrace& t);

// Accumulates d(loss * scale)/dW into the three gradient tensors.
void vgae_backward(const SpatialGraph& g, const num::ParamSet& params, const VgaeTrace& t,
                   double scale, num::Tensor& grad_w1, num::Tensor& grad_wmu,
                   num::Tensor& grad_wsig);

struct VgaeModel {
    num::ParamSet params;
    VgaeConfig config;
    std::size_t feature_dim = 0;
    std::vector<double> epoch_loss;  // mean per-graph loss per completed epoch
    bool aborted = false;            // diverged; params hold the last finite checkpoint
};

// Adam over shuffled minibatches with shared weights across graphs.
// Deterministic for a given seed at any thread count: gradients are formed in
// per-graph slots and reduced in graph order.
VgaeModel train_vgae(const std::vector<SpatialGraph>& graphs, const VgaeConfig& cfg,
                     std::uint64_t seed);

// Deterministic inference: mean head only (no sampling).
num::Tensor encode_mu(const SpatialGraph& g, const num::ParamSet& params);

// Arithmetic mean over the node rows (all 9, or contexts 1..8 only).
std::vector<double> pool_embedding(const num::Tensor& rows, PoolSet pool);

// Ranking quality of arec against the off-diagonal edges of A: probability a
// random edge pair scores above a random non-edge pair (ties count half).
// Degenerate graphs with no edge or no non-edge pairs return 0.5.
double edge_auc(const SpatialGraph& g, const num::Tensor& arec);
double mean_edge_auc(const std::vector<SpatialGraph>& graphs, const num::ParamSet& params);

// ---- embedding export ------------------------------------------------------

struct EmbeddingTable {
    std::vector<std::int64_t> ids;
    std::vector<std::string> labels;
    std::vector<std::vector<double>> rows;
};

void write_embeddings_csv(const std::string& path, const EmbeddingTable& table);
EmbeddingTable read_embeddings_csv(const std::string& path, int latent);

}  // namespace lucgen::graph
