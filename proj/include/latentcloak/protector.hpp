#pragma once

#include <vector>

#include "latentcloak/attention.hpp"
#include "latentcloak/backend.hpp"
#include "latentcloak/inversion.hpp"
#include "latentcloak/schedule.hpp"
#include "latentcloak/surrogates.hpp"

namespace latentcloak {

enum class ProtectionMode { impersonate, obfuscate_impersonate };

struct ProtectionConfig {
    int T = 20;
    int t_start = 3;
    int null_iters = 20;
    double null_lr = 0.1;
    NullSolver null_solver = NullSolver::adamw;
    bool null_warm_start = true;
    double null_early_stop = 1e-5;
    int adv_iters = 35;
    double adv_lr = 0.01;
    double lambda_adv = 0.003;
    ProtectionMode mode = ProtectionMode::impersonate;
    double w_obf = 0.0;
    bool multi_timestep = false;
    int multi_timestep_floor = 1;  // deepest optimized timestep
    std::uint64_t seed = 0;
    bool full_inversion = false;
    bool keep_best = false;
    StructureAggregation structure_agg = StructureAggregation::mean_per_map;
    // Ablation hook: 0 removes the self-attention loss from the objective.
    double structure_weight = 1.0;
    SiteFilter site_filter{};

    void validate() const;
};

struct LossPoint {
    double total = 0.0;
    double adv = 0.0;   // impersonation term
    double str = 0.0;
    double obf = 0.0;   // source-distance term, obfuscation mode only
};

struct ProtectStats {
    long predict_calls = 0;
    long vjp_z_calls = 0;
    long vjp_e_calls = 0;
    long attention_calls = 0;
    double stage2_wall_seconds = 0.0;
    // per optimized timestep, descending: gradient norm at each iteration
    std::vector<int> optimized_timesteps;
    std::vector<std::vector<double>> grad_norm_curves;
};

struct ProtectedResult {
    Image protected_image;
    LatentState final_latent;            // optimized latent at t_start
    std::vector<LossPoint> loss_curve;   // adv_iters + 1 points
    std::uint64_t reference_maps_digest = 0;
    Image reconstruction;                // stage-1 output, decode(z_bar_0)
    InversionTrajectory trajectory;
    UncondEmbeddingSet embedding_set;
    ProtectStats stats;
};

/// Full two-stage pipeline: encode, invert, learn per-timestep embeddings,
/// record reference attention, then optimize the latent at t_start against
/// lambda_adv * L_adv + L_str with embeddings frozen. Gradients flow through
/// the whole sampling chain, the decoder, and the feature extractors.
ProtectedResult protect(const Image& x, const Image& x_target,
                        const ProtectionConfig& cfg,
                        const DenoiserBackend& backend, const LatentCodec& codec,
                        const SurrogateEnsemble& ens, const NoiseSchedule& sched);

/// As protect, but against a synthesized target and with the source-distance
/// term weighted by cfg.w_obf.
ProtectedResult protect_obfuscate(const Image& x, const Image& x_t_synth,
                                  const ProtectionConfig& cfg,
                                  const DenoiserBackend& backend,
                                  const LatentCodec& codec,
                                  const SurrogateEnsemble& ens,
                                  const NoiseSchedule& sched);

/// Jointly optimizes the sampling inputs at every timestep from t_start down
/// to cfg.multi_timestep_floor. The deeper latents are parameterized as
/// additive residual corrections on the chain, zero-initialized, so the
/// single-timestep set degenerates to protect() exactly.
ProtectedResult multi_timestep_optimize(const Image& x, const Image& x_target,
                                        const ProtectionConfig& cfg,
                                        const DenoiserBackend& backend,
                                        const LatentCodec& codec,
                                        const SurrogateEnsemble& ens,
                                        const NoiseSchedule& sched);

/// Stable digest of an attention map set (FNV-1a over the raw values).
std::uint64_t attention_digest(const AttentionMapSet& maps);

/// Stage-2 objective exposed for gradient checks: everything after Stage 1,
/// as a pure function of the optimized parameter vector.
class ProtectionEngine {
public:
    struct LossBreakdown {
        double total = 0.0, adv = 0.0, str = 0.0, obf = 0.0;
    };

    struct ForwardState {
        std::vector<Eigen::VectorXd> step_inputs;  // index j: input at timestep t_start - j
        Eigen::VectorXd z0;
        Image protected_image;
        AttentionMapSet adv_maps;
        LossBreakdown loss;
    };

    ProtectionEngine(const ProtectionConfig& cfg, const DenoiserBackend& backend,
                     const LatentCodec& codec, const SurrogateEnsemble& ens,
                     const NoiseSchedule& sched,
                     const UncondEmbeddingSet& embeddings,
                     const AttentionMapSet& reference_maps,
                     std::vector<Eigen::VectorXd> target_features,
                     std::vector<Eigen::VectorXd> source_features = {});

    /// Parameter layout: [latent at t_start | residual at t_start-1 | ...]
    /// down to the configured floor (only the top latent unless
    /// cfg.multi_timestep).
    int parameter_size() const;
    std::vector<int> optimized_timesteps() const;
    Eigen::VectorXd initial_parameters() const;

    ForwardState forward(const Eigen::VectorXd& params) const;
    Eigen::VectorXd backward(const ForwardState& state) const;

    double loss_value(const Eigen::VectorXd& params) const {
        return forward(params).loss.total;
    }

    ProtectStats& stats() { return stats_; }

private:
    const ProtectionConfig& cfg_;
    const DenoiserBackend& backend_;
    const LatentCodec& codec_;
    const SurrogateEnsemble& ens_;
    const NoiseSchedule& sched_;
    const UncondEmbeddingSet& embeddings_;
    const AttentionMapSet& reference_maps_;
    std::vector<Eigen::VectorXd> target_features_;
    std::vector<Eigen::VectorXd> source_features_;  // obfuscation mode only
    std::vector<int> optimized_;                    // descending timesteps
    mutable ProtectStats stats_;
};

} // namespace latentcloak
