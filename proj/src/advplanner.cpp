#include "lucgen/advplanner.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "lucgen/csv.hpp"
#include "lucgen/errors.hpp"

namespace lucgen::plan {

using num::Act;
using num::AdamState;
using num::Mlp;
using num::ParamSet;
using num::SeededRng;
using num::Tensor;

const char* gen_loss_name(GenLossMode mode) {
    return mode == GenLossMode::Saturating ? "saturating" : "nonsaturating";
}

// ---- configuration ---------------------------------------------------------------

namespace {

void check_gan_config(const GanConfig& cfg) {
    if (cfg.latent < 1 || cfg.categories < 1 || cfg.grid < 1 || cfg.hidden_g < 1 ||
        cfg.hidden_d < 1)
        throw PreconditionError("gan: dimensions must be >= 1");
    if (cfg.batch < 1) throw PreconditionError("gan: batch must be >= 1");
    if (cfg.disc_steps < 1) throw PreconditionError("gan: disc_steps must be >= 1");
    if (cfg.iterations < 0) throw PreconditionError("gan: iterations must be >= 0");
}

} // namespace

Mlp make_generator(const GanConfig& cfg) {
    check_gan_config(cfg);
    return Mlp::make("gen",
                     {static_cast<std::size_t>(cfg.latent), static_cast<std::size_t>(cfg.hidden_g),
                      static_cast<std::size_t>(cfg.hidden_g), cfg.flat_dim()},
                     {Act::Relu, Act::Relu, Act::Softplus});
}

Mlp make_discriminator(const GanConfig& cfg) {
    check_gan_config(cfg);
    return Mlp::make("disc", {cfg.flat_dim(), static_cast<std::size_t>(cfg.hidden_d), 1},
                     {Act::Relu, Act::Sigmoid});
}

// ---- batch plumbing --------------------------------------------------------------

Tensor flatten_configs(const std::vector<land::LandUseConfig>& set) {
    if (set.empty()) throw PreconditionError("gan: empty config set");
    land::check_config(set.front());
    const std::size_t flat = set.front().tensor.size();
    Tensor out = Tensor::zeros({set.size(), flat});
    for (std::size_t i = 0; i < set.size(); ++i) {
        land::check_config(set[i]);
        if (set[i].tensor.size() != flat ||
            set[i].tensor.dim(0) != set.front().tensor.dim(0) ||
            set[i].tensor.dim(1) != set.front().tensor.dim(1))
            throw ShapeError("gan: config set members differ in shape");
        for (std::size_t j = 0; j < flat; ++j) out.at2(i, j) = set[i].tensor[j];
    }
    return out;
}

land::LandUseConfig unflatten_config(const Tensor& batch, std::size_t row, int categories,
                                     int grid) {
    land::LandUseConfig cfg = land::make_config(categories, grid);
    if (batch.rank() != 2 || batch.cols() != cfg.tensor.size() || row >= batch.rows())
        throw ShapeError("gan: unflatten shape mismatch");
    for (std::size_t j = 0; j < cfg.tensor.size(); ++j) cfg.tensor[j] = batch.at2(row, j);
    return cfg;
}

Tensor gather_rows(const Tensor& src, const std::vector<std::size_t>& idx) {
    Tensor out = Tensor::zeros({idx.size(), src.cols()});
    for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = 0; j < src.cols(); ++j) out.at2(i, j) = src.at2(idx[i], j);
    return out;
}

// ---- forward passes --------------------------------------------------------------

Tensor discriminate(const Mlp& disc, const ParamSet& params, const Tensor& flat_batch,
                    DiscTrace* trace) {
    const Tensor u = num::activate(flat_batch, Act::Log1p);
    if (trace) {
        trace->flat = flat_batch;
        trace->u = u;
        return disc.forward(params, u, &trace->net);
    }
    return disc.forward(params, u, nullptr);
}

Tensor discriminate_backward(const Mlp& disc, ParamSet& params, const DiscTrace& trace,
                             const Tensor& grad_scores, bool accumulate_params) {
    const Tensor grad_u = disc.backward(params, trace.net, grad_scores, accumulate_params);
    return num::activate_grad(trace.flat, trace.u, Act::Log1p, grad_u);
}

land::LandUseConfig generate(const Mlp& gen, const ParamSet& g_params,
                             const std::vector<double>& z, int categories, int grid) {
    if (z.size() != gen.in_dim()) throw ShapeError("gan: embedding dimension mismatch");
    Tensor zin = Tensor::zeros({1, z.size()});
    for (std::size_t j = 0; j < z.size(); ++j) zin.at2(0, j) = z[j];
    const Tensor flat = gen.forward(g_params, zin, nullptr);
    return unflatten_config(flat, 0, categories, grid);
}

// ---- objectives ------------------------------------------------------------------

double d_objective(const Mlp& disc, ParamSet& d_params, const Tensor& e_flat,
                   const Tensor& f_flat, const Tensor& t_flat, bool with_grads,
                   double* mean_de, double* mean_df, double* mean_dt) {
    if (e_flat.rank() != 2 || f_flat.rank() != 2 || t_flat.rank() != 2 ||
        e_flat.rows() != f_flat.rows() || e_flat.rows() != t_flat.rows())
        throw ShapeError("gan: discriminator minibatches must share one batch size");
    const std::size_t b = e_flat.rows();
    const double scale = 1.0 / static_cast<double>(b);

    DiscTrace te;
    DiscTrace tf;
    DiscTrace tt;
    const Tensor de = discriminate(disc, d_params, e_flat, with_grads ? &te : nullptr);
    const Tensor df = discriminate(disc, d_params, f_flat, with_grads ? &tf : nullptr);
    const Tensor dt = discriminate(disc, d_params, t_flat, with_grads ? &tt : nullptr);

    double value = 0.0;
    double sum_de = 0.0;
    double sum_df = 0.0;
    double sum_dt = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        value += std::log(de[i]) + std::log(1.0 - df[i]) + std::log(1.0 - dt[i]);
        sum_de += de[i];
        sum_df += df[i];
        sum_dt += dt[i];
    }
    value *= scale;
    if (mean_de) *mean_de = sum_de * scale;
    if (mean_df) *mean_df = sum_df * scale;
    if (mean_dt) *mean_dt = sum_dt * scale;

    if (with_grads) {
        Tensor ge = Tensor::zeros_like(de);
        Tensor gf = Tensor::zeros_like(df);
        Tensor gt = Tensor::zeros_like(dt);
        for (std::size_t i = 0; i < b; ++i) {
            ge[i] = scale / de[i];
            gf[i] = -scale / (1.0 - df[i]);
            gt[i] = -scale / (1.0 - dt[i]);
        }
        discriminate_backward(disc, d_params, te, ge, true);
        discriminate_backward(disc, d_params, tf, gf, true);
        discriminate_backward(disc, d_params, tt, gt, true);
    }
    return value;
}

double g_objective(const Mlp& gen, const Mlp& disc, ParamSet& g_params, ParamSet& d_params,
                   const Tensor& z_batch, GenLossMode mode, bool with_grads, double* mean_dg) {
    if (z_batch.rank() != 2 || z_batch.cols() != gen.in_dim())
        throw ShapeError("gan: embedding batch must be [batch x latent]");
    const std::size_t b = z_batch.rows();
    const double scale = 1.0 / static_cast<double>(b);

    Mlp::Trace gt;
    DiscTrace dt;
    const Tensor flat = gen.forward(g_params, z_batch, with_grads ? &gt : nullptr);
    const Tensor dg = discriminate(disc, d_params, flat, with_grads ? &dt : nullptr);

    double value = 0.0;
    double sum_dg = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        value += mode == GenLossMode::Saturating ? std::log(1.0 - dg[i]) : -std::log(dg[i]);
        sum_dg += dg[i];
    }
    value *= scale;
    if (mean_dg) *mean_dg = sum_dg * scale;

    if (with_grads) {
        Tensor gs = Tensor::zeros_like(dg);
        for (std::size_t i = 0; i < b; ++i)
            gs[i] = mode == GenLossMode::Saturating ? -scale / (1.0 - dg[i]) : -scale / dg[i];
        const Tensor grad_flat = discriminate_backward(disc, d_params, dt, gs, false);
        gen.backward(g_params, gt, grad_flat, true);
    }
    return value;
}

// ---- training --------------------------------------------------------------------

namespace {

// Without replacement when the set covers the batch, with replacement otherwise.
std::vector<std::size_t> pick_batch(SeededRng rng, std::size_t n, std::size_t k) {
    if (n >= k) return rng.sample_without_replacement(n, k);
    std::vector<std::size_t> idx(k);
    for (auto& v : idx) v = rng.index(n);
    return idx;
}

std::vector<std::vector<double>> snapshot_values(const ParamSet& params) {
    std::vector<std::vector<double>> snap;
    for (std::size_t i = 0; i < params.count(); ++i) snap.push_back(params.value_at(i).values());
    return snap;
}

void restore_values(ParamSet& params, const std::vector<std::vector<double>>& snap) {
    for (std::size_t i = 0; i < params.count(); ++i) params.value_at(i).values() = snap[i];
}

void negate_grads(ParamSet& params) {
    for (std::size_t i = 0; i < params.count(); ++i)
        for (double& v : params.grad_at(i).values()) v = -v;
}

} // namespace

GanModel train_gan(const std::vector<land::LandUseConfig>& excellent,
                   const std::vector<land::LandUseConfig>& terrible, const Tensor& embeddings,
                   const GanConfig& cfg) {
    check_gan_config(cfg);
    if (excellent.empty()) throw PreconditionError("gan: excellent set is empty");
    if (terrible.empty()) throw PreconditionError("gan: terrible set is empty");
    if (embeddings.rank() != 2 || embeddings.cols() != static_cast<std::size_t>(cfg.latent))
        throw ShapeError("gan: embedding matrix must be [count x latent]");
    if (embeddings.rows() == 0) throw PreconditionError("gan: embedding set is empty");

    GanModel model;
    model.config = cfg;
    model.gen = make_generator(cfg);
    model.disc = make_discriminator(cfg);

    const Tensor e_all = flatten_configs(excellent);
    const Tensor t_all = flatten_configs(terrible);
    if (e_all.cols() != cfg.flat_dim() || t_all.cols() != cfg.flat_dim())
        throw ShapeError("gan: config sets do not match categories x grid x grid");

    const SeededRng root(cfg.seed);
    SeededRng gen_rng = root.stream("init-gen");
    SeededRng disc_rng = root.stream("init-disc");
    model.gen.init_params(model.g_params, gen_rng);
    model.disc.init_params(model.d_params, disc_rng);

    AdamState adam_g(model.g_params, cfg.adam);
    AdamState adam_d(model.d_params, cfg.adam);

    auto g_snap = snapshot_values(model.g_params);
    auto d_snap = snapshot_values(model.d_params);
    const std::size_t b = static_cast<std::size_t>(cfg.batch);

    for (int it = 0; it < cfg.iterations; ++it) {
        TrainLogRow row;
        row.iter = it + 1;
        try {
            for (int s = 0; s < cfg.disc_steps; ++s) {
                const std::uint64_t ctr =
                    static_cast<std::uint64_t>(it) * static_cast<std::uint64_t>(cfg.disc_steps) +
                    static_cast<std::uint64_t>(s);
                const Tensor eb = gather_rows(
                    e_all, pick_batch(root.stream("e-batch", ctr), e_all.rows(), b));
                const Tensor zb = gather_rows(
                    embeddings, pick_batch(root.stream("zd-batch", ctr), embeddings.rows(), b));
                const Tensor tb = gather_rows(
                    t_all, pick_batch(root.stream("t-batch", ctr), t_all.rows(), b));
                const Tensor fb = model.gen.forward(model.g_params, zb, nullptr);
                row.d_loss = d_objective(model.disc, model.d_params, eb, fb, tb, true,
                                         &row.mean_de, &row.mean_df, &row.mean_dt);
                negate_grads(model.d_params);  // ascend the objective
                adam_d.step(model.d_params);
            }
            const Tensor zg = gather_rows(
                embeddings, pick_batch(root.stream("zg-batch", static_cast<std::uint64_t>(it)),
                                       embeddings.rows(), b));
            row.g_loss = g_objective(model.gen, model.disc, model.g_params, model.d_params, zg,
                                     cfg.gen_loss, true, nullptr);
            adam_g.step(model.g_params);
        } catch (const NumericError&) {
            restore_values(model.g_params, g_snap);
            restore_values(model.d_params, d_snap);
            model.aborted = true;
            break;
        }
        model.log.push_back(row);
        g_snap = snapshot_values(model.g_params);
        d_snap = snapshot_values(model.d_params);
    }
    return model;
}

void write_trainlog_csv(const std::string& path, const std::vector<TrainLogRow>& log) {
    csv::Writer w(path, "iter,d_loss,g_loss,mean_d_excellent,mean_d_fake,mean_d_terrible");
    for (const auto& r : log)
        w.row(std::to_string(r.iter) + ',' + csv::fmt_exact(r.d_loss) + ',' +
              csv::fmt_exact(r.g_loss) + ',' + csv::fmt_exact(r.mean_de) + ',' +
              csv::fmt_exact(r.mean_df) + ',' + csv::fmt_exact(r.mean_dt));
}

// ---- baselines -------------------------------------------------------------------

land::LandUseConfig baseline_avg(const std::vector<land::LandUseConfig>& set) {
    const Tensor all = flatten_configs(set);
    land::LandUseConfig out = land::make_config(set.front().categories(), set.front().grid());
    for (std::size_t j = 0; j < all.cols(); ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < all.rows(); ++i) sum += all.at2(i, j);
        out.tensor[j] = sum / static_cast<double>(all.rows());
    }
    return out;
}

land::LandUseConfig baseline_max(const std::vector<land::LandUseConfig>& set) {
    const Tensor all = flatten_configs(set);
    land::LandUseConfig out = land::make_config(set.front().categories(), set.front().grid());
    for (std::size_t j = 0; j < all.cols(); ++j) {
        double best = 0.0;
        for (std::size_t i = 0; i < all.rows(); ++i) best = std::max(best, all.at2(i, j));
        out.tensor[j] = best;
    }
    return out;
}

// ---- autoencoding baseline -------------------------------------------------------

namespace {

void check_vae_config(const VaeConfig& cfg) {
    if (cfg.latent < 1 || cfg.categories < 1 || cfg.grid < 1 || cfg.hidden < 1)
        throw PreconditionError("vae: dimensions must be >= 1");
    if (cfg.batch < 1) throw PreconditionError("vae: batch must be >= 1");
    if (cfg.epochs < 0) throw PreconditionError("vae: epochs must be >= 0");
}

} // namespace

Mlp make_vae_encoder(const VaeConfig& cfg) {
    return Mlp::make("vae-enc",
                     {cfg.flat_dim(), static_cast<std::size_t>(cfg.hidden),
                      2 * static_cast<std::size_t>(cfg.latent)},
                     {Act::Relu, Act::Identity});
}

Mlp make_vae_decoder(const VaeConfig& cfg) {
    return Mlp::make("vae-dec",
                     {static_cast<std::size_t>(cfg.latent), static_cast<std::size_t>(cfg.hidden),
                      cfg.flat_dim()},
                     {Act::Relu, Act::Softplus});
}

double vae_objective(const Mlp& enc, const Mlp& dec, ParamSet& params, const Tensor& x_batch,
                     const Tensor& eps, bool with_grads) {
    if (x_batch.rank() != 2 || x_batch.cols() != enc.in_dim())
        throw ShapeError("vae: input batch must be [batch x flat]");
    const std::size_t b = x_batch.rows();
    const std::size_t d = dec.in_dim();
    if (eps.rank() != 2 || eps.rows() != b || eps.cols() != d)
        throw ShapeError("vae: eps must be [batch x latent]");
    const double scale = 1.0 / static_cast<double>(b);

    Mlp::Trace et;
    Mlp::Trace dtr;
    const Tensor heads = enc.forward(params, x_batch, with_grads ? &et : nullptr);
    Tensor mu = Tensor::zeros({b, d});
    Tensor lv = Tensor::zeros({b, d});
    Tensor sigma = Tensor::zeros({b, d});
    Tensor z = Tensor::zeros({b, d});
    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            mu.at2(i, j) = heads.at2(i, j);
            lv.at2(i, j) = heads.at2(i, j + d);
            sigma.at2(i, j) = std::exp(0.5 * lv.at2(i, j));
            z.at2(i, j) = mu.at2(i, j) + sigma.at2(i, j) * eps.at2(i, j);
        }
    const Tensor xhat = dec.forward(params, z, with_grads ? &dtr : nullptr);

    double recon = 0.0;
    for (std::size_t i = 0; i < xhat.size(); ++i) {
        const double diff = xhat[i] - x_batch[i];
        recon += diff * diff;
    }
    double kl = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i)
        kl += 0.5 * (mu[i] * mu[i] + std::exp(lv[i]) - 1.0 - lv[i]);
    const double value = (recon + kl) * scale;

    if (with_grads) {
        Tensor dxhat = Tensor::zeros_like(xhat);
        for (std::size_t i = 0; i < xhat.size(); ++i)
            dxhat[i] = scale * 2.0 * (xhat[i] - x_batch[i]);
        const Tensor dz = dec.backward(params, dtr, dxhat, true);
        Tensor dheads = Tensor::zeros_like(heads);
        for (std::size_t i = 0; i < b; ++i)
            for (std::size_t j = 0; j < d; ++j) {
                dheads.at2(i, j) = dz.at2(i, j) + scale * mu.at2(i, j);
                dheads.at2(i, j + d) = dz.at2(i, j) * eps.at2(i, j) * 0.5 * sigma.at2(i, j) +
                                       scale * 0.5 * (std::exp(lv.at2(i, j)) - 1.0);
            }
        enc.backward(params, et, dheads, true);
    }
    return value;
}

VaeModel train_vae(const std::vector<land::LandUseConfig>& excellent, const VaeConfig& cfg) {
    check_vae_config(cfg);
    VaeModel model;
    model.config = cfg;
    model.enc = make_vae_encoder(cfg);
    model.dec = make_vae_decoder(cfg);

    const Tensor x_all = flatten_configs(excellent);
    if (x_all.cols() != cfg.flat_dim())
        throw ShapeError("vae: config set does not match categories x grid x grid");

    const SeededRng root(cfg.seed);
    SeededRng enc_rng = root.stream("init-enc");
    SeededRng dec_rng = root.stream("init-dec");
    model.enc.init_params(model.params, enc_rng);
    model.dec.init_params(model.params, dec_rng);

    AdamState adam(model.params, cfg.adam);
    auto snap = snapshot_values(model.params);
    const std::size_t n = x_all.rows();
    const std::size_t b = static_cast<std::size_t>(cfg.batch);
    const std::size_t d = static_cast<std::size_t>(cfg.latent);

    for (int e = 0; e < cfg.epochs; ++e) {
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        SeededRng shuffle = root.stream("shuffle", static_cast<std::uint64_t>(e));
        for (std::size_t i = n; i > 1; --i)
            std::swap(order[i - 1], order[shuffle.index(i)]);

        double epoch_sum = 0.0;
        std::size_t batches = 0;
        bool diverged = false;
        for (std::size_t start = 0; start < n; start += b) {
            const std::size_t bsz = std::min(b, n - start);
            std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                          order.begin() + static_cast<std::ptrdiff_t>(start + bsz));
            const Tensor xb = gather_rows(x_all, idx);
            SeededRng noise =
                root.stream("eps", static_cast<std::uint64_t>(e)).stream("batch", batches);
            Tensor eps = Tensor::zeros({bsz, d});
            for (auto& v : eps.values()) v = noise.normal();
            try {
                epoch_sum += vae_objective(model.enc, model.dec, model.params, xb, eps, true);
                adam.step(model.params);
            } catch (const NumericError&) {
                diverged = true;
                break;
            }
            ++batches;
        }
        if (diverged) {
            restore_values(model.params, snap);
            model.aborted = true;
            break;
        }
        model.epoch_loss.push_back(epoch_sum / static_cast<double>(batches));
        snap = snapshot_values(model.params);
    }
    return model;
}

land::LandUseConfig vae_generate(const VaeModel& model, const std::vector<double>& z) {
    if (z.size() != model.dec.in_dim()) throw ShapeError("vae: embedding dimension mismatch");
    Tensor zin = Tensor::zeros({1, z.size()});
    for (std::size_t j = 0; j < z.size(); ++j) zin.at2(0, j) = z[j];
    const Tensor flat = model.dec.forward(model.params, zin, nullptr);
    return unflatten_config(flat, 0, model.config.categories, model.config.grid);
}

} // namespace lucgen::plan
