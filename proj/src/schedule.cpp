#include "latentcloak/schedule.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

namespace latentcloak {

std::string to_string(ScheduleFamily family) {
    switch (family) {
        case ScheduleFamily::linear: return "linear";
        case ScheduleFamily::scaled_linear: return "scaled_linear";
        case ScheduleFamily::custom: return "custom";
    }
    throw ScheduleError("unknown schedule family");
}

ScheduleFamily schedule_family_from_string(const std::string& name) {
    if (name == "linear") return ScheduleFamily::linear;
    if (name == "scaled_linear") return ScheduleFamily::scaled_linear;
    if (name == "custom") return ScheduleFamily::custom;
    throw ScheduleError("unknown schedule family: " + name);
}

NoiseSchedule::NoiseSchedule(std::vector<double> betas, ScheduleFamily family,
                             double beta_min, double beta_max)
    : betas_(std::move(betas)), family_(family), beta_min_(beta_min),
      beta_max_(beta_max) {
    if (betas_.empty()) throw ScheduleError("schedule needs at least one step");
    alpha_bars_.resize(betas_.size() + 1);
    alpha_bars_[0] = 1.0;
    for (std::size_t t = 0; t < betas_.size(); ++t) {
        alpha_bars_[t + 1] = alpha_bars_[t] * (1.0 - betas_[t]);
    }
    validate();
}

NoiseSchedule NoiseSchedule::from_alpha_bars(std::vector<double> alpha_bars) {
    if (alpha_bars.size() < 2)
        throw ScheduleError("alpha_bars must contain at least [1, abar_1]");
    if (alpha_bars.front() != 1.0)
        throw ScheduleError("alpha_bars[0] must be exactly 1");
    NoiseSchedule sched;
    sched.alpha_bars_ = std::move(alpha_bars);
    sched.betas_.resize(sched.alpha_bars_.size() - 1);
    double bmin = 1.0, bmax = 0.0;
    for (std::size_t t = 1; t < sched.alpha_bars_.size(); ++t) {
        const double b = 1.0 - sched.alpha_bars_[t] / sched.alpha_bars_[t - 1];
        sched.betas_[t - 1] = b;
        bmin = std::min(bmin, b);
        bmax = std::max(bmax, b);
    }
    sched.family_ = ScheduleFamily::custom;
    sched.beta_min_ = bmin;
    sched.beta_max_ = bmax;
    sched.validate();
    return sched;
}

void NoiseSchedule::validate() const {
    if (alpha_bars_.size() != betas_.size() + 1)
        throw ScheduleError("alpha_bars length must be num_steps + 1");
    if (alpha_bars_[0] != 1.0)
        throw ScheduleError("alpha_bar at t=0 must be exactly 1");
    for (std::size_t t = 0; t < betas_.size(); ++t) {
        const double b = betas_[t];
        if (!(b > 0.0 && b <= 1.0))
            throw ScheduleError("beta_" + std::to_string(t + 1) +
                                " out of (0,1]: " + std::to_string(b));
        const double ab = alpha_bars_[t + 1];
        if (!(ab > 0.0 && ab <= 1.0) || !std::isfinite(ab))
            throw ScheduleError("alpha_bar_" + std::to_string(t + 1) +
                                " out of (0,1]");
        if (!(ab < alpha_bars_[t]))
            throw ScheduleError("alpha_bars must be strictly decreasing");
    }
}

double NoiseSchedule::beta(int t) const {
    if (t < 1 || t > num_steps())
        throw ScheduleError("beta index " + std::to_string(t) +
                            " outside [1, " + std::to_string(num_steps()) + "]");
    return betas_[static_cast<std::size_t>(t - 1)];
}

double NoiseSchedule::alpha_bar(int t) const {
    if (t < 0 || t > num_steps())
        throw ScheduleError("alpha_bar index " + std::to_string(t) +
                            " outside [0, " + std::to_string(num_steps()) + "]");
    return alpha_bars_[static_cast<std::size_t>(t)];
}

namespace {

std::vector<double> make_betas(int num_steps, double beta_min, double beta_max,
                               ScheduleFamily family) {
    if (num_steps < 1) throw ScheduleError("num_steps must be >= 1");
    if (!(beta_min > 0.0) || !(beta_max < 1.0) || beta_min > beta_max)
        throw ScheduleError("betas must satisfy 0 < beta_min <= beta_max < 1");
    std::vector<double> betas(static_cast<std::size_t>(num_steps));
    for (int i = 0; i < num_steps; ++i) {
        const double u = num_steps == 1
                             ? 0.0
                             : static_cast<double>(i) / (num_steps - 1);
        if (family == ScheduleFamily::linear) {
            betas[static_cast<std::size_t>(i)] =
                beta_min + u * (beta_max - beta_min);
        } else if (family == ScheduleFamily::scaled_linear) {
            const double s =
                std::sqrt(beta_min) + u * (std::sqrt(beta_max) - std::sqrt(beta_min));
            betas[static_cast<std::size_t>(i)] = s * s;
        } else {
            throw ScheduleError("cannot build a schedule of family 'custom'");
        }
    }
    return betas;
}

} // namespace

NoiseSchedule build_schedule(int num_steps, double beta_min, double beta_max,
                             ScheduleFamily family) {
    return NoiseSchedule(make_betas(num_steps, beta_min, beta_max, family),
                         family, beta_min, beta_max);
}

NoiseSchedule build_subsampled_schedule(int train_steps, int num_steps,
                                        double beta_min, double beta_max,
                                        ScheduleFamily family) {
    if (num_steps < 1 || train_steps < num_steps)
        throw ScheduleError("need train_steps >= num_steps >= 1");
    if (train_steps % num_steps != 0)
        throw ScheduleError("train_steps must be divisible by num_steps");
    const auto betas = make_betas(train_steps, beta_min, beta_max, family);
    const int stride = train_steps / num_steps;
    std::vector<double> abars(static_cast<std::size_t>(num_steps) + 1);
    abars[0] = 1.0;
    double prod = 1.0;
    for (int s = 1; s <= train_steps; ++s) {
        prod *= (1.0 - betas[static_cast<std::size_t>(s - 1)]);
        if (s % stride == 0) abars[static_cast<std::size_t>(s / stride)] = prod;
    }
    return NoiseSchedule::from_alpha_bars(std::move(abars));
}

std::string NoiseSchedule::to_json() const {
    nlohmann::json doc;
    doc["family"] = latentcloak::to_string(family_);
    doc["T"] = num_steps();
    doc["beta_min"] = beta_min_;
    doc["beta_max"] = beta_max_;
    doc["alpha_bars"] = alpha_bars_;
    return doc.dump(2);
}

NoiseSchedule NoiseSchedule::from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ScheduleError(std::string("schedule JSON parse failure: ") + e.what());
    }
    auto abars = doc.at("alpha_bars").get<std::vector<double>>();
    const int T = doc.at("T").get<int>();
    if (static_cast<int>(abars.size()) != T + 1)
        throw ScheduleError("schedule JSON: alpha_bars length must be T + 1");
    auto sched = NoiseSchedule::from_alpha_bars(std::move(abars));
    sched.family_ = schedule_family_from_string(doc.at("family").get<std::string>());
    sched.beta_min_ = doc.at("beta_min").get<double>();
    sched.beta_max_ = doc.at("beta_max").get<double>();
    return sched;
}

namespace {

void check_shapes(const LatentState& z, const Eigen::VectorXd& other,
                  const char* what) {
    if (z.values.size() != other.size())
        throw ScheduleError(std::string(what) + ": shape mismatch (" +
                            std::to_string(z.values.size()) + " vs " +
                            std::to_string(other.size()) + ")");
}

} // namespace

LatentState forward_marginal(const LatentState& z0, int t,
                             const Eigen::VectorXd& noise,
                             const NoiseSchedule& sched) {
    if (t < 0 || t > sched.num_steps())
        throw ScheduleError("forward_marginal: t outside [0, T]");
    check_shapes(z0, noise, "forward_marginal");
    const double abar = sched.alpha_bar(t);
    LatentState out;
    out.values = std::sqrt(abar) * z0.values + std::sqrt(1.0 - abar) * noise;
    out.timestep = t;
    return out;
}

StepCoeffs ddim_invert_coeffs(const NoiseSchedule& sched, int t) {
    if (t < 0 || t >= sched.num_steps())
        throw ScheduleError("ddim_invert_step: t outside [0, T-1]");
    const double a_from = sched.alpha_bar(t);
    const double a_to = sched.alpha_bar(t + 1);
    StepCoeffs c;
    c.scale = std::sqrt(a_to / a_from);
    c.eps_weight = std::sqrt(a_to) * (std::sqrt(1.0 / a_to - 1.0) -
                                      std::sqrt(1.0 / a_from - 1.0));
    return c;
}

StepCoeffs ddim_sample_coeffs(const NoiseSchedule& sched, int t) {
    if (t < 1 || t > sched.num_steps())
        throw ScheduleError("ddim_sample_step: t outside [1, T]");
    const double a_from = sched.alpha_bar(t);
    const double a_to = sched.alpha_bar(t - 1);
    StepCoeffs c;
    c.scale = std::sqrt(a_to / a_from);
    c.eps_weight = std::sqrt(a_to) * (std::sqrt(1.0 / a_to - 1.0) -
                                      std::sqrt(1.0 / a_from - 1.0));
    return c;
}

LatentState ddim_invert_step(const LatentState& z_t, const Eigen::VectorXd& eps,
                             int t, const NoiseSchedule& sched) {
    check_shapes(z_t, eps, "ddim_invert_step");
    const auto c = ddim_invert_coeffs(sched, t);
    return LatentState{apply_step(z_t.values, eps, c), t + 1};
}

LatentState ddim_sample_step(const LatentState& z_t, const Eigen::VectorXd& eps,
                             int t, const NoiseSchedule& sched) {
    check_shapes(z_t, eps, "ddim_sample_step");
    const auto c = ddim_sample_coeffs(sched, t);
    return LatentState{apply_step(z_t.values, eps, c), t - 1};
}

Eigen::VectorXd ddpm_posterior_mean(const LatentState& z_t,
                                    const Eigen::VectorXd& eps, int t,
                                    const NoiseSchedule& sched) {
    if (t < 1 || t > sched.num_steps())
        throw ScheduleError("ddpm_posterior_mean: t outside [1, T]");
    check_shapes(z_t, eps, "ddpm_posterior_mean");
    const double beta = sched.beta(t);
    const double alpha = 1.0 - beta;
    const double abar = sched.alpha_bar(t);
    return (z_t.values - (beta / std::sqrt(1.0 - abar)) * eps) / std::sqrt(alpha);
}

LatentState ddpm_sample_step(const LatentState& z_t, const Eigen::VectorXd& eps,
                             int t, double sigma_t,
                             const Eigen::VectorXd& noise,
                             const NoiseSchedule& sched) {
    if (sigma_t < 0.0) throw ScheduleError("ddpm_sample_step: sigma_t < 0");
    check_shapes(z_t, noise, "ddpm_sample_step");
    Eigen::VectorXd mean = ddpm_posterior_mean(z_t, eps, t, sched);
    if (sigma_t > 0.0) mean += sigma_t * noise;
    return LatentState{std::move(mean), t - 1};
}

} // namespace latentcloak
