#include "latentcloak/protector.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "latentcloak/codec.hpp"
#include "latentcloak/optim.hpp"

namespace latentcloak {

void ProtectionConfig::validate() const {
    if (T < 1) throw ConfigError("T must be >= 1");
    if (t_start < 1 || t_start > T)
        throw ConfigError("t_start must lie in [1, T]");
    if (null_iters < 0 || adv_iters < 0)
        throw ConfigError("iteration counts must be >= 0");
    if (null_lr < 0.0 || adv_lr < 0.0)
        throw ConfigError("learning rates must be >= 0");
    if (lambda_adv < 0.0) throw ConfigError("lambda_adv must be >= 0");
    if (w_obf < 0.0) throw ConfigError("w_obf must be >= 0");
    if (structure_weight < 0.0) throw ConfigError("structure_weight must be >= 0");
    if (multi_timestep &&
        (multi_timestep_floor < 1 || multi_timestep_floor > t_start))
        throw ConfigError("multi_timestep_floor must lie in [1, t_start]");
}

std::uint64_t attention_digest(const AttentionMapSet& maps) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    auto absorb = [&h](const void* p, std::size_t n) {
        const auto* bytes = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= bytes[i];
            h *= 0x100000001b3ULL;
        }
    };
    for (const auto& [key, map] : maps.maps) {
        absorb(&key.timestep, sizeof(key.timestep));
        absorb(&key.layer, sizeof(key.layer));
        absorb(&key.head, sizeof(key.head));
        absorb(map.data(), sizeof(double) * static_cast<std::size_t>(map.size()));
    }
    return h;
}

ProtectionEngine::ProtectionEngine(
    const ProtectionConfig& cfg, const DenoiserBackend& backend,
    const LatentCodec& codec, const SurrogateEnsemble& ens,
    const NoiseSchedule& sched, const UncondEmbeddingSet& embeddings,
    const AttentionMapSet& reference_maps,
    std::vector<Eigen::VectorXd> target_features,
    std::vector<Eigen::VectorXd> source_features)
    : cfg_(cfg), backend_(backend), codec_(codec), ens_(ens), sched_(sched),
      embeddings_(embeddings), reference_maps_(reference_maps),
      target_features_(std::move(target_features)),
      source_features_(std::move(source_features)) {
    const int floor = cfg_.multi_timestep ? cfg_.multi_timestep_floor : cfg_.t_start;
    for (int t = cfg_.t_start; t >= floor; --t) optimized_.push_back(t);
    stats_.optimized_timesteps = optimized_;
    stats_.grad_norm_curves.resize(optimized_.size());
    if (cfg_.mode == ProtectionMode::obfuscate_impersonate &&
        cfg_.w_obf != 0.0 && source_features_.empty())
        throw ProtectError("obfuscation mode needs source features");
}

int ProtectionEngine::parameter_size() const {
    return backend_.latent_dim() * static_cast<int>(optimized_.size());
}

std::vector<int> ProtectionEngine::optimized_timesteps() const {
    return optimized_;
}

Eigen::VectorXd ProtectionEngine::initial_parameters() const {
    const int d = backend_.latent_dim();
    Eigen::VectorXd params = Eigen::VectorXd::Zero(parameter_size());
    // top slot holds the latent itself; deeper slots are residual corrections
    params.head(d) = embeddings_.bar_latent(cfg_.t_start).values;
    return params;
}

ProtectionEngine::ForwardState ProtectionEngine::forward(
    const Eigen::VectorXd& params) const {
    if (params.size() != parameter_size())
        throw ProtectError("parameter vector has wrong size");
    const int d = backend_.latent_dim();

    ForwardState state;
    state.step_inputs.reserve(static_cast<std::size_t>(cfg_.t_start));
    Eigen::VectorXd z = params.head(d);
    for (int t = cfg_.t_start; t >= 1; --t) {
        if (t != cfg_.t_start) {
            const auto slot = std::find(optimized_.begin(), optimized_.end(), t);
            if (slot != optimized_.end()) {
                const auto idx = static_cast<Eigen::Index>(slot - optimized_.begin());
                z += params.segment(idx * d, d);
            }
        }
        state.step_inputs.push_back(z);
        const auto& emb = embeddings_.embeddings.at(t);
        const Eigen::VectorXd eps = backend_.predict_noise(z, t, emb.values);
        ++stats_.predict_calls;

        const auto maps = backend_.capture_attention(z, t, emb.values);
        ++stats_.attention_calls;
        std::size_t idx = 0;
        for (const auto& site : backend_.attention_sites())
            for (int h = 0; h < site.head_count; ++h, ++idx)
                if (cfg_.site_filter.selects(site.layer_id))
                    state.adv_maps.maps[AttentionKey{t, site.layer_id, h}] = maps[idx];

        z = apply_step(z, eps, ddim_sample_coeffs(sched_, t));
    }
    state.z0 = z;
    state.protected_image = codec_.decode(state.z0);

    state.loss.adv = adversarial_loss(state.protected_image, target_features_, ens_);
    double adv_term = state.loss.adv;
    if (cfg_.mode == ProtectionMode::obfuscate_impersonate && cfg_.w_obf != 0.0) {
        state.loss.obf =
            adversarial_loss(state.protected_image, source_features_, ens_);
        adv_term -= cfg_.w_obf * state.loss.obf;
    }
    state.loss.str = structure_loss(state.adv_maps, reference_maps_, cfg_.structure_agg);
    state.loss.total =
        cfg_.lambda_adv * adv_term + cfg_.structure_weight * state.loss.str;
    return state;
}

Eigen::VectorXd ProtectionEngine::backward(const ForwardState& state) const {
    const int d = backend_.latent_dim();
    Eigen::VectorXd grads = Eigen::VectorXd::Zero(parameter_size());

    // d total / d x_p
    Eigen::VectorXd g_img =
        cfg_.lambda_adv *
        adversarial_loss_grad(state.protected_image, target_features_, ens_);
    if (cfg_.mode == ProtectionMode::obfuscate_impersonate && cfg_.w_obf != 0.0)
        g_img -= cfg_.lambda_adv * cfg_.w_obf *
                 adversarial_loss_grad(state.protected_image, source_features_, ens_);

    Eigen::VectorXd g_out = codec_.decode_vjp(state.z0, g_img);

    const auto map_cots =
        structure_loss_cotangents(state.adv_maps, reference_maps_, cfg_.structure_agg);
    const auto sites = backend_.attention_sites();

    for (int t = 1; t <= cfg_.t_start; ++t) {
        const auto& emb = embeddings_.embeddings.at(t);
        const Eigen::VectorXd& z_in =
            state.step_inputs[static_cast<std::size_t>(cfg_.t_start - t)];
        const auto c = ddim_sample_coeffs(sched_, t);

        Eigen::VectorXd g_in =
            c.scale * g_out +
            backend_.predict_noise_vjp_z(z_in, t, emb.values, c.eps_weight * g_out);
        ++stats_.vjp_z_calls;

        // attention contribution at this step
        std::vector<Eigen::MatrixXd> cots;
        bool any = false;
        for (const auto& site : sites)
            for (int h = 0; h < site.head_count; ++h) {
                const auto it = map_cots.find(AttentionKey{t, site.layer_id, h});
                if (it != map_cots.end() && cfg_.structure_weight != 0.0) {
                    cots.push_back(cfg_.structure_weight * it->second);
                    any = true;
                } else {
                    cots.emplace_back(Eigen::MatrixXd::Zero(site.token_count,
                                                            site.token_count));
                }
            }
        if (any) g_in += backend_.attention_vjp_z(z_in, t, emb.values, cots);

        const auto slot = std::find(optimized_.begin(), optimized_.end(), t);
        if (slot != optimized_.end()) {
            const auto idx = static_cast<Eigen::Index>(slot - optimized_.begin());
            // residual slots see the gradient directly; the top slot is the
            // chain head and is assigned below
            if (t != cfg_.t_start) grads.segment(idx * d, d) = g_in;
        }
        g_out = g_in;
    }
    grads.head(d) = g_out;
    return grads;
}

namespace {

ProtectedResult run_protection(const Image& x, const Image& x_target,
                               const ProtectionConfig& cfg,
                               const DenoiserBackend& backend,
                               const LatentCodec& codec,
                               const SurrogateEnsemble& ens,
                               const NoiseSchedule& sched) {
    cfg.validate();
    ens.validate();
    if (sched.num_steps() != cfg.T)
        throw ConfigError("schedule has " + std::to_string(sched.num_steps()) +
                          " steps but config expects T=" + std::to_string(cfg.T));
    if (codec.latent_dim() != backend.latent_dim())
        throw ConfigError("codec and backend disagree on latent dimension");

    ProtectedResult result;

    // Stage 1: inversion and per-timestep embedding learning.
    const LatentState z0{codec.encode(x), 0};
    const int invert_depth = cfg.full_inversion ? cfg.T : cfg.t_start;
    result.trajectory =
        ddim_invert(z0, invert_depth, backend, sched, backend.initial_null_embedding());

    NullTextOptions null_opts;
    null_opts.iters = cfg.null_iters;
    null_opts.lr = cfg.null_lr;
    null_opts.solver = cfg.null_solver;
    null_opts.warm_start = cfg.null_warm_start;
    null_opts.early_stop_loss = cfg.null_early_stop;
    result.embedding_set = learn_null_embeddings(result.trajectory, null_opts,
                                                 backend, sched, cfg.t_start);
    result.reconstruction = reconstruct(result.embedding_set, codec);

    const AttentionMapSet reference_maps =
        record_reference_maps(result.embedding_set, backend, cfg.site_filter);
    result.reference_maps_digest = attention_digest(reference_maps);

    // Target (and, for obfuscation, source) features are fixed per run.
    std::vector<Eigen::VectorXd> target_features = ensemble_features(ens, x_target);
    std::vector<Eigen::VectorXd> source_features;
    if (cfg.mode == ProtectionMode::obfuscate_impersonate)
        source_features = ensemble_features(ens, x);

    ProtectionEngine engine(cfg, backend, codec, ens, sched, result.embedding_set,
                            reference_maps, std::move(target_features),
                            std::move(source_features));

    const auto stage2_begin = std::chrono::steady_clock::now();
    Eigen::VectorXd params = engine.initial_parameters();
    AdamW optimizer(AdamW::Options{.lr = cfg.adv_lr});

    auto state = engine.forward(params);
    auto record = [&result](const ProtectionEngine::ForwardState& s) {
        result.loss_curve.push_back(
            LossPoint{s.loss.total, s.loss.adv, s.loss.str, s.loss.obf});
    };
    record(state);

    Eigen::VectorXd best_params = params;
    double best_total = state.loss.total;
    ProtectionEngine::ForwardState best_state = state;

    const int d = backend.latent_dim();
    for (int it = 1; it <= cfg.adv_iters; ++it) {
        const Eigen::VectorXd grads = engine.backward(state);
        for (std::size_t s = 0; s < engine.optimized_timesteps().size(); ++s)
            engine.stats().grad_norm_curves[s].push_back(
                grads.segment(static_cast<Eigen::Index>(s) * d, d).norm());
        optimizer.step(params, grads);
        state = engine.forward(params);
        if (!std::isfinite(state.loss.total))
            throw ProtectError("non-finite total loss at iteration " +
                               std::to_string(it) + " (adv=" +
                               std::to_string(state.loss.adv) + ", str=" +
                               std::to_string(state.loss.str) + ")");
        record(state);
        if (cfg.keep_best && state.loss.total < best_total) {
            best_total = state.loss.total;
            best_params = params;
            best_state = state;
        }
    }

    const auto& chosen = cfg.keep_best ? best_state : state;
    const auto& chosen_params = cfg.keep_best ? best_params : params;
    result.protected_image = chosen.protected_image;
    result.final_latent = LatentState{chosen_params.head(d), cfg.t_start};
    result.stats = engine.stats();
    result.stats.stage2_wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      stage2_begin)
            .count();
    return result;
}

} // namespace

ProtectedResult protect(const Image& x, const Image& x_target,
                        const ProtectionConfig& cfg,
                        const DenoiserBackend& backend, const LatentCodec& codec,
                        const SurrogateEnsemble& ens, const NoiseSchedule& sched) {
    ProtectionConfig run_cfg = cfg;
    run_cfg.multi_timestep = false;
    return run_protection(x, x_target, run_cfg, backend, codec, ens, sched);
}

ProtectedResult protect_obfuscate(const Image& x, const Image& x_t_synth,
                                  const ProtectionConfig& cfg,
                                  const DenoiserBackend& backend,
                                  const LatentCodec& codec,
                                  const SurrogateEnsemble& ens,
                                  const NoiseSchedule& sched) {
    ProtectionConfig run_cfg = cfg;
    run_cfg.mode = ProtectionMode::obfuscate_impersonate;
    run_cfg.multi_timestep = false;
    return run_protection(x, x_t_synth, run_cfg, backend, codec, ens, sched);
}

ProtectedResult multi_timestep_optimize(const Image& x, const Image& x_target,
                                        const ProtectionConfig& cfg,
                                        const DenoiserBackend& backend,
                                        const LatentCodec& codec,
                                        const SurrogateEnsemble& ens,
                                        const NoiseSchedule& sched) {
    if (!cfg.multi_timestep)
        throw ConfigError("multi_timestep_optimize requires cfg.multi_timestep");
    return run_protection(x, x_target, cfg, backend, codec, ens, sched);
}

} // namespace latentcloak
