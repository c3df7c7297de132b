#pragma once

#include <map>
#include <vector>

#include "latentcloak/backend.hpp"
#include "latentcloak/schedule.hpp"

namespace latentcloak {

/// The recorded inversion path z_0 .. z_{t_start}, all produced under one
/// fixed unconditional embedding.
struct InversionTrajectory {
    std::vector<LatentState> latents;  // index i holds z_i
    UncondEmbedding null_embedding_used;

    int depth() const { return static_cast<int>(latents.size()) - 1; }
    const LatentState& at(int t) const { return latents.at(static_cast<std::size_t>(t)); }
};

/// Inverts z_0 upward for t_start steps under the fixed null embedding,
/// recording every intermediate. Aborts with the offending timestep and norm
/// if a non-finite value appears.
InversionTrajectory ddim_invert(const LatentState& z0, int t_start,
                                const DenoiserBackend& backend,
                                const NoiseSchedule& sched,
                                const Eigen::VectorXd& null_embedding);

/// Replays every recorded step and returns the maximum deviation; the
/// trajectory invariant requires this to be ~0.
double trajectory_replay_error(const InversionTrajectory& traj,
                               const DenoiserBackend& backend,
                               const NoiseSchedule& sched);

enum class NullSolver {
    adamw,  // paper-stated optimizer
    gd,     // plain gradient descent, used by the safe-step monotonicity checks
    exact,  // closed-form least squares; needs an affine backend
};

struct NullTextOptions {
    int iters = 20;
    double lr = 0.1;
    NullSolver solver = NullSolver::adamw;
    bool warm_start = true;
    // Inner loop stops once the per-timestep loss falls below this; set to 0
    // to disable.
    double early_stop_loss = 1e-5;
};

/// Learned per-timestep embeddings plus the committed sampling path
/// z_bar_{t_start} .. z_bar_0.
struct UncondEmbeddingSet {
    std::map<int, UncondEmbedding> embeddings;  // timestep -> embedding
    std::vector<LatentState> bar_latents;       // descending timestep order
    std::vector<std::vector<double>> loss_curves;  // one curve per timestep, t_start first

    int start_timestep() const { return bar_latents.empty() ? 0 : bar_latents.front().timestep; }
    const LatentState& bar_latent(int t) const;
};

/// Stage 1: walk i = t_start .. 1, fit embedding i so one sampling step from
/// z_bar_i reproduces the recorded z_{i-1}, then commit z_bar_{i-1} with the
/// fitted embedding. start_timestep 0 means "the trajectory's full depth";
/// anything smaller starts the walk partway down a deeper trajectory.
UncondEmbeddingSet learn_null_embeddings(const InversionTrajectory& traj,
                                         const NullTextOptions& opts,
                                         const DenoiserBackend& backend,
                                         const NoiseSchedule& sched,
                                         int start_timestep = 0);

/// Checks the committed-path invariant; returns the max deviation across steps.
double embedding_set_replay_error(const UncondEmbeddingSet& set,
                                  const DenoiserBackend& backend,
                                  const NoiseSchedule& sched);

/// Gradient of the per-timestep loss |step(z_bar, eps(z_bar, t, e)) - target|^2
/// with respect to e. Exposed for the gradient test suite.
Eigen::VectorXd null_loss_gradient(const Eigen::VectorXd& z_bar,
                                   const Eigen::VectorXd& target, int t,
                                   const Eigen::VectorXd& embedding,
                                   const DenoiserBackend& backend,
                                   const NoiseSchedule& sched);

double null_loss_value(const Eigen::VectorXd& z_bar,
                       const Eigen::VectorXd& target, int t,
                       const Eigen::VectorXd& embedding,
                       const DenoiserBackend& backend,
                       const NoiseSchedule& sched);

/// Decode of the final committed latent.
Image reconstruct(const UncondEmbeddingSet& set, const LatentCodec& codec);

} // namespace latentcloak
