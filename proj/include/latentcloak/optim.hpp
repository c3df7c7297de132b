#pragma once

#include <Eigen/Dense>

#include <cmath>

namespace latentcloak {

/// AdamW with decoupled weight decay. Weight decay defaults to zero, which
/// is what both the embedding and the latent optimizations use.
class AdamW {
public:
    struct Options {
        double lr = 0.01;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double eps = 1e-8;
        double weight_decay = 0.0;
    };

    explicit AdamW(Options opts = {}) : opts_(opts) {}

    void reset() {
        step_count_ = 0;
        m_.resize(0);
        v_.resize(0);
    }

    void step(Eigen::VectorXd& param, const Eigen::VectorXd& grad) {
        if (m_.size() != param.size()) {
            m_ = Eigen::VectorXd::Zero(param.size());
            v_ = Eigen::VectorXd::Zero(param.size());
        }
        ++step_count_;
        if (opts_.weight_decay != 0.0)
            param -= opts_.lr * opts_.weight_decay * param;
        m_ = opts_.beta1 * m_ + (1.0 - opts_.beta1) * grad;
        v_ = opts_.beta2 * v_.array().matrix() +
             (1.0 - opts_.beta2) * grad.array().square().matrix();
        const double bc1 = 1.0 - std::pow(opts_.beta1, step_count_);
        const double bc2 = 1.0 - std::pow(opts_.beta2, step_count_);
        param -= (opts_.lr / bc1) * (m_.array() /
                 ((v_.array() / bc2).sqrt() + opts_.eps)).matrix();
    }

    const Options& options() const { return opts_; }

private:
    Options opts_;
    Eigen::VectorXd m_, v_;
    long step_count_ = 0;
};

class GradientDescent {
public:
    explicit GradientDescent(double lr) : lr_(lr) {}
    void step(Eigen::VectorXd& param, const Eigen::VectorXd& grad) {
        param -= lr_ * grad;
    }

private:
    double lr_;
};

} // namespace latentcloak
