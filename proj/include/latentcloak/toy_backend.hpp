#pragma once

#include <string>
#include <vector>

#include "latentcloak/backend.hpp"

namespace latentcloak {

struct ToyBackendConfig {
    std::uint64_t seed = 0;
    int latent_dim = 48;
    int embedding_dim = 48;
    int num_timesteps = 20;
    int num_tokens = 8;
    int attn_dim = 4;
    double noise_matrix_norm = 0.5;      // spectral norm of A_t
    double embedding_matrix_norm = 0.5;  // spectral norm of B_t
    double offset_scale = 0.05;          // entry scale of c_t
    double attn_weight_scale = 1.0;      // entry scale of Wq, Wk

    std::string to_json() const;
    static ToyBackendConfig from_json(const std::string& doc);
};

/// Closed-form denoiser eps(z,t,e) = A_t z + B_t e + c_t with one dot-product
/// self-attention site over a num_tokens-way chunking of the latent. Every
/// parameter is drawn from the single seed; A_t and B_t are rescaled so their
/// spectral norms stay at the configured (contractive) bounds.
class ToyBackend final : public DenoiserBackend, public AffineDenoiser {
public:
    explicit ToyBackend(const ToyBackendConfig& config);

    std::string id() const override { return "toy"; }
    int latent_dim() const override { return config_.latent_dim; }
    int embedding_dim() const override { return config_.embedding_dim; }
    int num_timesteps() const override { return config_.num_timesteps; }
    std::vector<AttentionSite> attention_sites() const override;
    Eigen::VectorXd initial_null_embedding() const override;

    Eigen::VectorXd predict_noise(const Eigen::VectorXd& z, int t,
                                  const Eigen::VectorXd& e) const override;
    Eigen::VectorXd predict_noise_vjp_z(const Eigen::VectorXd& z, int t,
                                        const Eigen::VectorXd& e,
                                        const Eigen::VectorXd& cot) const override;
    Eigen::VectorXd predict_noise_vjp_e(const Eigen::VectorXd& z, int t,
                                        const Eigen::VectorXd& e,
                                        const Eigen::VectorXd& cot) const override;

    std::vector<Eigen::MatrixXd> capture_attention(
        const Eigen::VectorXd& z, int t, const Eigen::VectorXd& e) const override;
    Eigen::VectorXd attention_vjp_z(
        const Eigen::VectorXd& z, int t, const Eigen::VectorXd& e,
        const std::vector<Eigen::MatrixXd>& cot) const override;

    // AffineDenoiser
    const Eigen::MatrixXd& noise_matrix(int t) const override;
    const Eigen::MatrixXd& embedding_matrix(int t) const override;
    const Eigen::VectorXd& noise_offset(int t) const override;

    const ToyBackendConfig& config() const { return config_; }
    int token_dim() const { return config_.latent_dim / config_.num_tokens; }

    const Eigen::MatrixXd& query_weights() const { return w_query_; }
    const Eigen::MatrixXd& key_weights() const { return w_key_; }

private:
    int check_timestep(int t) const;
    Eigen::MatrixXd tokens(const Eigen::VectorXd& z) const;

    ToyBackendConfig config_;
    std::vector<Eigen::MatrixXd> a_;  // index t-1
    std::vector<Eigen::MatrixXd> b_;
    std::vector<Eigen::VectorXd> c_;
    Eigen::MatrixXd w_query_;  // token_dim x attn_dim
    Eigen::MatrixXd w_key_;
};

} // namespace latentcloak
