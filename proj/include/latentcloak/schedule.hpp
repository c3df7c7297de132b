#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "latentcloak/errors.hpp"

namespace latentcloak {

enum class ScheduleFamily { linear, scaled_linear, custom };

std::string to_string(ScheduleFamily family);
ScheduleFamily schedule_family_from_string(const std::string& name);

/// Per-timestep noise levels beta_t and cumulative products alpha_bar_t.
///
/// Indexing convention: alpha_bars has T+1 entries with alpha_bars[0] = 1,
/// so timestep 0 means "clean latent". betas[t-1] is the noise added going
/// from t-1 to t. All stored values are 64-bit.
class NoiseSchedule {
public:
    NoiseSchedule(std::vector<double> betas, ScheduleFamily family,
                  double beta_min, double beta_max);

    /// Construct directly from cumulative products (alpha_bars[0] must be 1).
    /// Effective betas are recovered as 1 - abar_t/abar_{t-1}.
    static NoiseSchedule from_alpha_bars(std::vector<double> alpha_bars);

    int num_steps() const { return static_cast<int>(betas_.size()); }
    double beta(int t) const;       // t in [1, T]
    double alpha_bar(int t) const;  // t in [0, T]
    const std::vector<double>& betas() const { return betas_; }
    const std::vector<double>& alpha_bars() const { return alpha_bars_; }

    ScheduleFamily family() const { return family_; }
    double beta_min() const { return beta_min_; }
    double beta_max() const { return beta_max_; }

    std::string to_json() const;
    static NoiseSchedule from_json(const std::string& doc);

private:
    NoiseSchedule() = default;
    void validate() const;

    std::vector<double> betas_;       // size T
    std::vector<double> alpha_bars_;  // size T+1, alpha_bars_[0] == 1
    ScheduleFamily family_ = ScheduleFamily::custom;
    double beta_min_ = 0.0;
    double beta_max_ = 0.0;
};

/// Build a T-step schedule. scaled_linear interpolates sqrt(beta) linearly
/// and squares, linear interpolates beta directly.
NoiseSchedule build_schedule(int num_steps, double beta_min, double beta_max,
                             ScheduleFamily family);

/// Build a training schedule of `train_steps` steps and keep every
/// (train_steps / num_steps)-th alpha_bar, mapping inference step i to
/// training step i * stride. train_steps must be divisible by num_steps.
NoiseSchedule build_subsampled_schedule(int train_steps, int num_steps,
                                        double beta_min, double beta_max,
                                        ScheduleFamily family);

/// A latent vector tagged with the diffusion timestep it lives at.
struct LatentState {
    Eigen::VectorXd values;
    int timestep = 0;
};

/// Coefficients of one deterministic step: out = scale * z + eps_weight * eps.
struct StepCoeffs {
    double scale = 1.0;
    double eps_weight = 0.0;
};

/// Coefficients taking z_t to z_{t+1}, t in [0, T-1].
StepCoeffs ddim_invert_coeffs(const NoiseSchedule& sched, int t);
/// Coefficients taking z_t to z_{t-1}, t in [1, T].
StepCoeffs ddim_sample_coeffs(const NoiseSchedule& sched, int t);

/// Applies step coefficients to any dense latent; coefficients stay 64-bit
/// and are narrowed to the latent's scalar type only at the final combine.
template <class DerivedZ, class DerivedE>
auto apply_step(const Eigen::MatrixBase<DerivedZ>& z,
                const Eigen::MatrixBase<DerivedE>& eps,
                const StepCoeffs& c) {
    using Scalar = typename DerivedZ::Scalar;
    return (Scalar(c.scale) * z + Scalar(c.eps_weight) * eps).eval();
}

/// z_t = sqrt(abar_t) z0 + sqrt(1 - abar_t) noise.
LatentState forward_marginal(const LatentState& z0, int t,
                             const Eigen::VectorXd& noise,
                             const NoiseSchedule& sched);

/// One DDIM inversion step from t to t+1; eps is the denoiser prediction
/// at (z_t, t).
LatentState ddim_invert_step(const LatentState& z_t, const Eigen::VectorXd& eps,
                             int t, const NoiseSchedule& sched);

/// One deterministic DDIM sampling step from t to t-1.
LatentState ddim_sample_step(const LatentState& z_t, const Eigen::VectorXd& eps,
                             int t, const NoiseSchedule& sched);

/// Posterior mean (1/sqrt(alpha_t)) (z_t - beta_t/sqrt(1-abar_t) eps),
/// alpha_t = 1 - beta_t. t in [1, T].
Eigen::VectorXd ddpm_posterior_mean(const LatentState& z_t,
                                    const Eigen::VectorXd& eps, int t,
                                    const NoiseSchedule& sched);

/// Stochastic ancestral step: posterior mean + sigma_t * noise. With
/// sigma_t = 0 this is the deterministic limit.
LatentState ddpm_sample_step(const LatentState& z_t, const Eigen::VectorXd& eps,
                             int t, double sigma_t,
                             const Eigen::VectorXd& noise,
                             const NoiseSchedule& sched);

} // namespace latentcloak
