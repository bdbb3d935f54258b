#include "lucgen/spatialgraph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lucgen/csv.hpp"
#include "lucgen/errors.hpp"
#include "lucgen/kernels.hpp"
#include "lucgen/layers.hpp"

namespace lucgen::graph {

using num::ParamSet;
using num::SeededRng;
using num::Tensor;

namespace {

constexpr std::size_t kNodes = 9;
constexpr double kSigmaSnap = 1e-12;

// Ring of context nodes in geographic adjacency order.
constexpr int kRing[8] = {1, 2, 3, 5, 8, 7, 6, 4};

Tensor matmul(const Tensor& a, const Tensor& b) {
    Tensor c = Tensor::zeros({a.rows(), b.cols()});
    if (a.cols() != b.rows())
        throw ShapeError("matmul: inner dimensions differ: " + num::shape_str(a) + " vs " +
                         num::shape_str(b));
    num::matmul(a.data(), b.data(), c.values().data(), a.rows(), a.cols(), b.cols());
    return c;
}

}  // namespace

SpatialGraph build_graph(const Tensor& features, EdgePattern pattern) {
    if (features.rank() != 2 || features.rows() != 8)
        throw ShapeError("build_graph: features must have 8 rows, got " +
                         num::shape_str(features));
    SpatialGraph g;
    g.a = Tensor::zeros({kNodes, kNodes});
    g.x = Tensor::zeros({kNodes, features.cols()});
    for (std::size_t r = 0; r < 8; ++r)
        for (std::size_t c = 0; c < features.cols(); ++c) g.x.at2(r + 1, c) = features.at2(r, c);

    auto connect = [&](int i, int j) {
        g.a.at2(i, j) = 1.0;
        g.a.at2(j, i) = 1.0;
    };
    if (pattern == EdgePattern::StarOnly || pattern == EdgePattern::StarPlusRing)
        for (int k = 1; k <= 8; ++k) connect(0, k);
    if (pattern == EdgePattern::RingOnly || pattern == EdgePattern::StarPlusRing)
        for (int i = 0; i < 8; ++i) connect(kRing[i], kRing[(i + 1) % 8]);
    return g;
}

Tensor normalize_adjacency(const Tensor& a) {
    if (a.rank() != 2 || a.rows() != a.cols())
        throw ShapeError("normalize_adjacency: adjacency must be square, got " +
                         num::shape_str(a));
    const std::size_t n = a.rows();
    for (std::size_t i = 0; i < n; ++i) {
        if (a.at2(i, i) != 0.0)
            throw PreconditionError("normalize_adjacency: diagonal must be zero");
        for (std::size_t j = 0; j < n; ++j) {
            const double v = a.at2(i, j);
            if (v != 0.0 && v != 1.0)
                throw PreconditionError("normalize_adjacency: entries must be 0 or 1");
            if (v != a.at2(j, i))
                throw PreconditionError("normalize_adjacency: adjacency must be symmetric");
        }
    }
    std::vector<double> inv_sqrt_deg(n);
    for (std::size_t i = 0; i < n; ++i) {
        double deg = 1.0;  // self-loop
        for (std::size_t j = 0; j < n; ++j) deg += a.at2(i, j);
        inv_sqrt_deg[i] = 1.0 / std::sqrt(deg);
    }
    Tensor ahat = Tensor::zeros({n, n});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double tilde = a.at2(i, j) + (i == j ? 1.0 : 0.0);
            ahat.at2(i, j) = inv_sqrt_deg[i] * tilde * inv_sqrt_deg[j];
        }
    return ahat;
}

void init_vgae_params(ParamSet& params, int feature_dim, const VgaeConfig& cfg,
                      const SeededRng& rng) {
    if (feature_dim < 1) throw PreconditionError("init_vgae_params: feature_dim must be >= 1");
    if (cfg.hidden < 1 || cfg.latent < 1)
        throw PreconditionError("init_vgae_params: hidden and latent must be >= 1");
    const std::size_t k = static_cast<std::size_t>(feature_dim);
    const std::size_t h = static_cast<std::size_t>(cfg.hidden);
    const std::size_t d = static_cast<std::size_t>(cfg.latent);
    SeededRng r1 = rng.stream("vgae.W1");
    SeededRng r2 = rng.stream("vgae.Wmu");
    SeededRng r3 = rng.stream("vgae.Wsig");
    params.add("vgae.W1", num::glorot_uniform(k, h, r1));
    params.add("vgae.Wmu", num::glorot_uniform(h, d, r2));
    params.add("vgae.Wsig", num::glorot_uniform(h, d, r3));
}

Tensor reparameterize_with(const Tensor& mu, const Tensor& logvar, const Tensor& eps) {
    if (!mu.same_shape(logvar) || !mu.same_shape(eps))
        throw ShapeError("reparameterize: mu/logvar/eps shapes differ");
    Tensor z = Tensor::zeros_like(mu);
    for (std::size_t i = 0; i < mu.size(); ++i) {
        double sigma = std::exp(0.5 * logvar[i]);
        if (sigma < kSigmaSnap) sigma = 0.0;
        z[i] = mu[i] + sigma * eps[i];
    }
    num::ensure_finite(z, "reparameterize output");
    return z;
}

Tensor reparameterize(const Tensor& mu, const Tensor& logvar, SeededRng& rng) {
    Tensor eps = Tensor::zeros_like(mu);
    for (std::size_t i = 0; i < eps.size(); ++i) eps[i] = rng.normal();
    return reparameterize_with(mu, logvar, eps);
}

Tensor decode(const Tensor& z) {
    if (z.rank() != 2) throw ShapeError("decode: z must be a matrix, got " + num::shape_str(z));
    Tensor zz = Tensor::zeros({z.rows(), z.rows()});
    for (std::size_t i = 0; i < z.rows(); ++i)
        for (std::size_t j = 0; j < z.rows(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < z.cols(); ++k) s += z.at2(i, k) * z.at2(j, k);
            zz.at2(i, j) = s;
        }
    return num::activate(zz, num::Act::Sigmoid);
}

void vgae_forward(const SpatialGraph& g, const ParamSet& params, const Tensor& eps, VgaeTrace& t) {
    t.ahat = normalize_adjacency(g.a);
    t.p = matmul(t.ahat, g.x);
    t.s1 = matmul(t.p, params.value("vgae.W1"));
    t.xhat = num::activate(t.s1, num::Act::Relu);
    t.q = matmul(t.ahat, t.xhat);
    t.mu = matmul(t.q, params.value("vgae.Wmu"));
    t.logvar = matmul(t.q, params.value("vgae.Wsig"));
    t.sigma = Tensor::zeros_like(t.logvar);
    for (std::size_t i = 0; i < t.sigma.size(); ++i) {
        double s = std::exp(0.5 * t.logvar[i]);
        if (s < kSigmaSnap) s = 0.0;
        t.sigma[i] = s;
    }
    num::ensure_finite(t.sigma, "vgae sigma");
    if (!eps.same_shape(t.mu))
        throw ShapeError("vgae_forward: eps must be " + num::shape_str(t.mu) + ", got " +
                         num::shape_str(eps));
    t.eps = eps;
    t.z = Tensor::zeros_like(t.mu);
    for (std::size_t i = 0; i < t.z.size(); ++i) t.z[i] = t.mu[i] + t.sigma[i] * t.eps[i];
    num::ensure_finite(t.z, "vgae z");
    t.zz = Tensor::zeros({t.z.rows(), t.z.rows()});
    for (std::size_t i = 0; i < t.z.rows(); ++i)
        for (std::size_t j = 0; j < t.z.rows(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < t.z.cols(); ++k) s += t.z.at2(i, k) * t.z.at2(j, k);
            t.zz.at2(i, j) = s;
        }
    t.arec = num::activate(t.zz, num::Act::Sigmoid);
}

double kl_term(const Tensor& mu, const Tensor& logvar) {
    if (!mu.same_shape(logvar)) throw ShapeError("kl_term: shape mismatch");
    double kl = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i)
        kl += 0.5 * (mu[i] * mu[i] + std::exp(logvar[i]) - 1.0 - logvar[i]);
    num::ensure_finite(kl, "kl term");
    if (kl < 0.0) {
        if (kl < -1e-9) throw NumericError("kl term negative beyond rounding");
        kl = 0.0;
    }
    return kl;
}

double recon_term(const SpatialGraph& g, const Tensor& arec) {
    if (!arec.same_shape(g.a)) throw ShapeError("recon_term: arec/adjacency shape mismatch");
    double err = 0.0;
    for (std::size_t i = 0; i < g.a.rows(); ++i)
        for (std::size_t j = 0; j < g.a.cols(); ++j) {
            const double target = g.a.at2(i, j) + (i == j ? 1.0 : 0.0);
            const double d = target - arec.at2(i, j);
            err += d * d;
        }
    num::ensure_finite(err, "reconstruction term");
    return err;
}

double vgae_loss(const SpatialGraph& g, const VgaeTrace& t) {
    return kl_term(t.mu, t.logvar) + recon_term(g, t.arec);
}

void vgae_backward(const SpatialGraph& g, const ParamSet& params, const VgaeTrace& t, double scale,
                   Tensor& grad_w1, Tensor& grad_wmu, Tensor& grad_wsig) {
    const std::size_t n = t.z.rows();
    const std::size_t d = t.z.cols();

    // Reconstruction: d/darec of scale * sum (T - arec)^2.
    Tensor darec = Tensor::zeros_like(t.arec);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double target = g.a.at2(i, j) + (i == j ? 1.0 : 0.0);
            darec.at2(i, j) = scale * -2.0 * (target - t.arec.at2(i, j));
        }
    const Tensor dzz = num::activate_grad(t.zz, t.arec, num::Act::Sigmoid, darec);

    // zz = z z^T ->  dz = (dzz + dzz^T) z.
    Tensor m = Tensor::zeros_like(dzz);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m.at2(i, j) = dzz.at2(i, j) + dzz.at2(j, i);
    Tensor dz = Tensor::zeros({n, d});
    num::matmul(m.data(), t.z.data(), dz.values().data(), n, n, d);

    // Heads, including the direct KL gradients.
    Tensor dmu = Tensor::zeros_like(t.mu);
    Tensor dlv = Tensor::zeros_like(t.logvar);
    for (std::size_t i = 0; i < dmu.size(); ++i) {
        dmu[i] = dz[i] + scale * t.mu[i];
        dlv[i] = dz[i] * t.eps[i] * 0.5 * t.sigma[i] +
                 scale * 0.5 * (std::exp(t.logvar[i]) - 1.0);
    }

    num::matmul_acc_tn(t.q.data(), dmu.data(), grad_wmu.values().data(), n,
                                 t.q.cols(), d);
    num::matmul_acc_tn(t.q.data(), dlv.data(), grad_wsig.values().data(), n,
                                 t.q.cols(), d);

    // dq = dmu Wmu^T + dlv Wsig^T; then back through q = ahat xhat and relu.
    Tensor dq = Tensor::zeros_like(t.q);
    num::matmul_acc_nt(dmu.data(), params.value("vgae.Wmu").data(),
                                 dq.values().data(), n, t.q.cols(), d);
    num::matmul_acc_nt(dlv.data(), params.value("vgae.Wsig").data(),
                                 dq.values().data(), n, t.q.cols(), d);
    Tensor dxhat = matmul(t.ahat, dq);  // ahat symmetric
    const Tensor ds1 = num::activate_grad(t.s1, t.xhat, num::Act::Relu, dxhat);
    num::matmul_acc_tn(t.p.data(), ds1.data(), grad_w1.values().data(), n, t.p.cols(),
                                 t.s1.cols());
}

// ---- training -------------------------------------------------------------------

namespace {

std::vector<std::size_t> shuffled_indices(std::size_t n, SeededRng& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.index(i)]);
    return idx;
}

std::vector<std::vector<double>> snapshot_values(const ParamSet& params) {
    std::vector<std::vector<double>> snap;
    for (std::size_t i = 0; i < params.count(); ++i) snap.push_back(params.value_at(i).values());
    return snap;
}

void restore_values(ParamSet& params, const std::vector<std::vector<double>>& snap) {
    for (std::size_t i = 0; i < snap.size(); ++i) params.value_at(i).values() = snap[i];
}

}  // namespace

VgaeModel train_vgae(const std::vector<SpatialGraph>& graphs, const VgaeConfig& cfg,
                     std::uint64_t seed) {
    if (graphs.empty()) throw PreconditionError("train_vgae: empty corpus");
    const std::size_t k = graphs[0].x.cols();
    for (const auto& g : graphs)
        if (g.x.cols() != k) throw ShapeError("train_vgae: inconsistent feature widths");
    if (cfg.epochs < 0 || cfg.batch < 1)
        throw PreconditionError("train_vgae: epochs must be >= 0 and batch >= 1");

    VgaeModel model;
    model.config = cfg;
    model.feature_dim = k;
    const SeededRng root(seed);
    init_vgae_params(model.params, static_cast<int>(k), cfg, root);
    num::AdamState adam(model.params, cfg.adam);

    const std::size_t h = static_cast<std::size_t>(cfg.hidden);
    const std::size_t d = static_cast<std::size_t>(cfg.latent);
    auto snapshot = snapshot_values(model.params);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        SeededRng shuffle_rng = root.stream("shuffle", static_cast<std::uint64_t>(epoch));
        const SeededRng eps_root = root.stream("eps", static_cast<std::uint64_t>(epoch));
        const auto order = shuffled_indices(graphs.size(), shuffle_rng);

        double epoch_sum = 0.0;
        bool finite = true;
        for (std::size_t start = 0; start < order.size() && finite;
             start += static_cast<std::size_t>(cfg.batch)) {
            const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
            const std::size_t bsz = stop - start;
            const double scale = 1.0 / static_cast<double>(bsz);

            std::vector<Tensor> gw1(bsz), gwmu(bsz), gwsig(bsz);
            std::vector<double> losses(bsz, 0.0);
            // Independent output slots; safe to fill in parallel.
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
            for (std::size_t b = 0; b < bsz; ++b) {
                const SpatialGraph& g = graphs[order[start + b]];
                SeededRng noise = eps_root.stream("graph", start + b);
                Tensor eps = Tensor::zeros({kNodes, d});
                for (std::size_t i = 0; i < eps.size(); ++i) eps[i] = noise.normal();
                VgaeTrace trace;
                vgae_forward(g, model.params, eps, trace);
                losses[b] = vgae_loss(g, trace);
                gw1[b] = Tensor::zeros({k, h});
                gwmu[b] = Tensor::zeros({h, d});
                gwsig[b] = Tensor::zeros({h, d});
                vgae_backward(g, model.params, trace, scale, gw1[b], gwmu[b], gwsig[b]);
            }

            double batch_loss = 0.0;
            for (std::size_t b = 0; b < bsz; ++b) batch_loss += losses[b];
            if (!std::isfinite(batch_loss)) {
                finite = false;
                break;
            }
            epoch_sum += batch_loss;

            // Slot reduction in graph order keeps updates bit-identical at any
            // thread count.
            Tensor& w1g = model.params.grad("vgae.W1");
            Tensor& wmug = model.params.grad("vgae.Wmu");
            Tensor& wsigg = model.params.grad("vgae.Wsig");
            for (std::size_t b = 0; b < bsz; ++b)
                for (std::size_t i = 0; i < w1g.size(); ++i) w1g[i] += gw1[b][i];
            for (std::size_t b = 0; b < bsz; ++b)
                for (std::size_t i = 0; i < wmug.size(); ++i) wmug[i] += gwmu[b][i];
            for (std::size_t b = 0; b < bsz; ++b)
                for (std::size_t i = 0; i < wsigg.size(); ++i) wsigg[i] += gwsig[b][i];
            adam.step(model.params);
        }

        if (!finite) {
            restore_values(model.params, snapshot);
            model.aborted = true;
            break;
        }
        model.epoch_loss.push_back(epoch_sum / static_cast<double>(graphs.size()));
        snapshot = snapshot_values(model.params);
    }
    return model;
}

Tensor encode_mu(const SpatialGraph& g, const ParamSet& params) {
    const Tensor ahat = normalize_adjacency(g.a);
    const Tensor p = matmul(ahat, g.x);
    const Tensor xhat = num::activate(matmul(p, params.value("vgae.W1")), num::Act::Relu);
    const Tensor q = matmul(ahat, xhat);
    return matmul(q, params.value("vgae.Wmu"));
}

std::vector<double> pool_embedding(const Tensor& rows, PoolSet pool) {
    if (rows.rank() != 2 || rows.rows() != kNodes)
        throw ShapeError("pool_embedding: expected a 9-row matrix, got " + num::shape_str(rows));
    const std::size_t first = pool == PoolSet::Contexts8 ? 1 : 0;
    const std::size_t count = kNodes - first;
    std::vector<double> out(rows.cols(), 0.0);
    for (std::size_t i = first; i < kNodes; ++i)
        for (std::size_t j = 0; j < rows.cols(); ++j) out[j] += rows.at2(i, j);
    for (auto& v : out) v /= static_cast<double>(count);
    return out;
}

double edge_auc(const SpatialGraph& g, const Tensor& arec) {
    if (!arec.same_shape(g.a)) throw ShapeError("edge_auc: arec/adjacency shape mismatch");
    const std::size_t n = g.a.rows();
    std::vector<double> pos, neg;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            (g.a.at2(i, j) != 0.0 ? pos : neg).push_back(arec.at2(i, j));
    if (pos.empty() || neg.empty()) return 0.5;
    double wins = 0.0;
    for (double p : pos)
        for (double q : neg) {
            if (p > q) wins += 1.0;
            else if (p == q) wins += 0.5;
        }
    return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

double mean_edge_auc(const std::vector<SpatialGraph>& graphs, const ParamSet& params) {
    if (graphs.empty()) throw PreconditionError("mean_edge_auc: empty corpus");
    double sum = 0.0;
    for (const auto& g : graphs) sum += edge_auc(g, decode(encode_mu(g, params)));
    return sum / static_cast<double>(graphs.size());
}

// ---- embedding export ------------------------------------------------------

namespace {

std::string embeddings_header(int latent) {
    std::string h = "community_id,label";
    for (int j = 0; j < latent; ++j) h += ",e_" + std::to_string(j);
    return h;
}

}  // namespace

void write_embeddings_csv(const std::string& path, const EmbeddingTable& table) {
    if (table.ids.size() != table.labels.size() || table.ids.size() != table.rows.size())
        throw PreconditionError("write_embeddings_csv: column lengths differ");
    const int latent = table.rows.empty() ? 0 : static_cast<int>(table.rows[0].size());
    csv::Writer w(path, embeddings_header(latent));
    for (std::size_t i = 0; i < table.ids.size(); ++i) {
        if (static_cast<int>(table.rows[i].size()) != latent)
            throw PreconditionError("write_embeddings_csv: ragged rows");
        std::string line = std::to_string(table.ids[i]) + "," + table.labels[i];
        for (double v : table.rows[i]) line += "," + csv::fmt_exact(v);
        w.row(line);
    }
}

EmbeddingTable read_embeddings_csv(const std::string& path, int latent) {
    csv::Reader r(path, embeddings_header(latent));
    EmbeddingTable out;
    std::vector<std::string> f;
    std::size_t line = 1;
    while (r.next(f)) {
        ++line;
        if (f.size() != static_cast<std::size_t>(latent) + 2)
            throw IngestError(path + ": line " + std::to_string(line) + ": wrong field count");
        long long id = 0;
        if (!csv::parse_int64(f[0], id))
            throw IngestError(path + ": line " + std::to_string(line) + ": bad community id");
        std::vector<double> row(static_cast<std::size_t>(latent), 0.0);
        for (int j = 0; j < latent; ++j) {
            double v = 0.0;
            if (!csv::parse_double(f[static_cast<std::size_t>(j) + 2], v))
                throw IngestError(path + ": line " + std::to_string(line) + ": bad number");
            row[static_cast<std::size_t>(j)] = v;
        }
        out.ids.push_back(id);
        out.labels.push_back(f[1]);
        out.rows.push_back(std::move(row));
    }
    return out;
}

}  // namespace lucgen::graph
