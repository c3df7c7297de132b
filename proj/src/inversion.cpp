#include "latentcloak/inversion.hpp"

#include <cmath>

#include "latentcloak/optim.hpp"

namespace latentcloak {

InversionTrajectory ddim_invert(const LatentState& z0, int t_start,
                                const DenoiserBackend& backend,
                                const NoiseSchedule& sched,
                                const Eigen::VectorXd& null_embedding) {
    if (z0.timestep != 0)
        throw InversionError("ddim_invert expects a latent at timestep 0");
    if (t_start < 1 || t_start > sched.num_steps())
        throw InversionError("t_start outside [1, T]");
    backend.require_latent(z0.values);
    backend.require_embedding(null_embedding);

    InversionTrajectory traj;
    traj.null_embedding_used = UncondEmbedding{null_embedding, 0};
    traj.latents.reserve(static_cast<std::size_t>(t_start) + 1);
    traj.latents.push_back(z0);

    LatentState z = z0;
    for (int t = 0; t < t_start; ++t) {
        // Eq. 2 conditions the prediction on the step being inverted, i.e.
        // the denoiser sees timestep t+1 while consuming z_t.
        const Eigen::VectorXd eps = backend.predict_noise(z.values, t + 1, null_embedding);
        z = ddim_invert_step(z, eps, t, sched);
        if (!z.values.allFinite())
            throw InversionError("inversion diverged at timestep " +
                                 std::to_string(z.timestep) + " (norm=" +
                                 std::to_string(z.values.norm()) + ")");
        traj.latents.push_back(z);
    }
    return traj;
}

double trajectory_replay_error(const InversionTrajectory& traj,
                               const DenoiserBackend& backend,
                               const NoiseSchedule& sched) {
    double worst = 0.0;
    for (int t = 0; t < traj.depth(); ++t) {
        const Eigen::VectorXd eps = backend.predict_noise(
            traj.at(t).values, t + 1, traj.null_embedding_used.values);
        const LatentState next = ddim_invert_step(traj.at(t), eps, t, sched);
        worst = std::max(worst, (next.values - traj.at(t + 1).values)
                                    .cwiseAbs()
                                    .maxCoeff());
    }
    return worst;
}

const LatentState& UncondEmbeddingSet::bar_latent(int t) const {
    for (const auto& z : bar_latents)
        if (z.timestep == t) return z;
    throw InversionError("no committed latent at timestep " + std::to_string(t));
}

double null_loss_value(const Eigen::VectorXd& z_bar,
                       const Eigen::VectorXd& target, int t,
                       const Eigen::VectorXd& embedding,
                       const DenoiserBackend& backend,
                       const NoiseSchedule& sched) {
    const auto c = ddim_sample_coeffs(sched, t);
    const Eigen::VectorXd eps = backend.predict_noise(z_bar, t, embedding);
    const Eigen::VectorXd out = apply_step(z_bar, eps, c);
    return (out - target).squaredNorm();
}

Eigen::VectorXd null_loss_gradient(const Eigen::VectorXd& z_bar,
                                   const Eigen::VectorXd& target, int t,
                                   const Eigen::VectorXd& embedding,
                                   const DenoiserBackend& backend,
                                   const NoiseSchedule& sched) {
    const auto c = ddim_sample_coeffs(sched, t);
    const Eigen::VectorXd eps = backend.predict_noise(z_bar, t, embedding);
    const Eigen::VectorXd out = apply_step(z_bar, eps, c);
    const Eigen::VectorXd cot = 2.0 * c.eps_weight * (out - target);
    return backend.predict_noise_vjp_e(z_bar, t, embedding, cot);
}

namespace {

Eigen::VectorXd solve_embedding_exactly(const Eigen::VectorXd& z_bar,
                                        const Eigen::VectorXd& target, int t,
                                        const DenoiserBackend& backend,
                                        const NoiseSchedule& sched) {
    const auto* affine = as_affine(backend);
    if (!affine)
        throw InversionError(
            "exact null-text solver needs a backend exposing affine structure");
    const auto c = ddim_sample_coeffs(sched, t);
    // target = c1 z + c2 (A z + B e + c)  =>  (c2 B) e = rhs
    const Eigen::VectorXd rhs = target - c.scale * z_bar -
                                c.eps_weight * (affine->noise_matrix(t) * z_bar +
                                                affine->noise_offset(t));
    const Eigen::MatrixXd m = c.eps_weight * affine->embedding_matrix(t);
    return m.colPivHouseholderQr().solve(rhs);
}

} // namespace

UncondEmbeddingSet learn_null_embeddings(const InversionTrajectory& traj,
                                         const NullTextOptions& opts,
                                         const DenoiserBackend& backend,
                                         const NoiseSchedule& sched,
                                         int start_timestep) {
    const int t_start = start_timestep == 0 ? traj.depth() : start_timestep;
    if (t_start < 1 || t_start > traj.depth())
        throw InversionError("start timestep outside the recorded trajectory");
    if (traj.depth() < 1)
        throw InversionError("trajectory must contain at least [z_0, z_1]");
    if (opts.iters < 0) throw InversionError("iters must be >= 0");

    UncondEmbeddingSet out;
    out.bar_latents.reserve(static_cast<std::size_t>(t_start) + 1);
    out.bar_latents.push_back(traj.at(t_start));  // z_bar_{t_start} = z_{t_start}

    Eigen::VectorXd embedding = traj.null_embedding_used.values;
    LatentState z_bar = traj.at(t_start);

    for (int t = t_start; t >= 1; --t) {
        if (!opts.warm_start) embedding = traj.null_embedding_used.values;
        const Eigen::VectorXd& target = traj.at(t - 1).values;

        std::vector<double> curve;
        double loss = null_loss_value(z_bar.values, target, t, embedding, backend, sched);
        curve.push_back(loss);
        if (!std::isfinite(loss))
            throw InversionError("null-text loss non-finite at timestep " +
                                 std::to_string(t));

        if (opts.solver == NullSolver::exact) {
            if (opts.iters > 0) {
                embedding = solve_embedding_exactly(z_bar.values, target, t, backend, sched);
                curve.push_back(null_loss_value(z_bar.values, target, t, embedding,
                                                backend, sched));
            }
        } else {
            AdamW adamw(AdamW::Options{.lr = opts.lr});
            GradientDescent gd(opts.lr);
            for (int it = 0; it < opts.iters; ++it) {
                if (opts.early_stop_loss > 0.0 && loss < opts.early_stop_loss) break;
                const Eigen::VectorXd grad = null_loss_gradient(
                    z_bar.values, target, t, embedding, backend, sched);
                if (opts.solver == NullSolver::adamw)
                    adamw.step(embedding, grad);
                else
                    gd.step(embedding, grad);
                loss = null_loss_value(z_bar.values, target, t, embedding, backend, sched);
                curve.push_back(loss);
                if (!std::isfinite(loss))
                    throw InversionError("null-text loss diverged at timestep " +
                                         std::to_string(t));
            }
        }

        out.embeddings.emplace(t, UncondEmbedding{embedding, t});
        out.loss_curves.push_back(std::move(curve));

        // commit z_bar_{t-1} with the embedding that will be frozen later
        const Eigen::VectorXd eps = backend.predict_noise(z_bar.values, t, embedding);
        z_bar = ddim_sample_step(z_bar, eps, t, sched);
        out.bar_latents.push_back(z_bar);
    }
    return out;
}

double embedding_set_replay_error(const UncondEmbeddingSet& set,
                                  const DenoiserBackend& backend,
                                  const NoiseSchedule& sched) {
    double worst = 0.0;
    for (std::size_t i = 0; i + 1 < set.bar_latents.size(); ++i) {
        const auto& from = set.bar_latents[i];
        const auto& to = set.bar_latents[i + 1];
        const auto& emb = set.embeddings.at(from.timestep);
        const Eigen::VectorXd eps =
            backend.predict_noise(from.values, from.timestep, emb.values);
        const LatentState replay = ddim_sample_step(from, eps, from.timestep, sched);
        worst = std::max(worst,
                         (replay.values - to.values).cwiseAbs().maxCoeff());
    }
    return worst;
}

Image reconstruct(const UncondEmbeddingSet& set, const LatentCodec& codec) {
    if (set.bar_latents.empty() || set.bar_latents.back().timestep != 0)
        throw InversionError("reconstruct needs a committed path down to t=0");
    return codec.decode(set.bar_latents.back().values);
}

} // namespace latentcloak
