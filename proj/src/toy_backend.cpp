#include "latentcloak/toy_backend.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "latentcloak/rng.hpp"

namespace latentcloak {

std::string ToyBackendConfig::to_json() const {
    nlohmann::json doc{{"seed", seed},
                       {"latent_dim", latent_dim},
                       {"embedding_dim", embedding_dim},
                       {"num_timesteps", num_timesteps},
                       {"num_tokens", num_tokens},
                       {"attn_dim", attn_dim},
                       {"noise_matrix_norm", noise_matrix_norm},
                       {"embedding_matrix_norm", embedding_matrix_norm},
                       {"offset_scale", offset_scale},
                       {"attn_weight_scale", attn_weight_scale}};
    return doc.dump(2);
}

ToyBackendConfig ToyBackendConfig::from_json(const std::string& text) {
    nlohmann::json doc = nlohmann::json::parse(text);
    ToyBackendConfig c;
    c.seed = doc.value("seed", c.seed);
    c.latent_dim = doc.value("latent_dim", c.latent_dim);
    c.embedding_dim = doc.value("embedding_dim", c.embedding_dim);
    c.num_timesteps = doc.value("num_timesteps", c.num_timesteps);
    c.num_tokens = doc.value("num_tokens", c.num_tokens);
    c.attn_dim = doc.value("attn_dim", c.attn_dim);
    c.noise_matrix_norm = doc.value("noise_matrix_norm", c.noise_matrix_norm);
    c.embedding_matrix_norm = doc.value("embedding_matrix_norm", c.embedding_matrix_norm);
    c.offset_scale = doc.value("offset_scale", c.offset_scale);
    c.attn_weight_scale = doc.value("attn_weight_scale", c.attn_weight_scale);
    return c;
}

namespace {

Eigen::MatrixXd scaled_to_norm(Eigen::MatrixXd m, double target_norm) {
    if (target_norm == 0.0) return Eigen::MatrixXd::Zero(m.rows(), m.cols());
    const double sigma = m.bdcSvd().singularValues()(0);
    if (sigma > 0.0) m *= target_norm / sigma;
    return m;
}

} // namespace

ToyBackend::ToyBackend(const ToyBackendConfig& config) : config_(config) {
    if (config_.latent_dim < 1 || config_.embedding_dim < 1 ||
        config_.num_timesteps < 1)
        throw BackendError("toy backend dimensions must be positive");
    if (config_.num_tokens < 1 || config_.latent_dim % config_.num_tokens != 0)
        throw BackendError("latent_dim must be divisible by num_tokens");
    if (config_.attn_dim < 1) throw BackendError("attn_dim must be positive");

    const int d = config_.latent_dim;
    const int m = config_.embedding_dim;
    a_.reserve(static_cast<std::size_t>(config_.num_timesteps));
    b_.reserve(static_cast<std::size_t>(config_.num_timesteps));
    c_.reserve(static_cast<std::size_t>(config_.num_timesteps));
    for (int t = 1; t <= config_.num_timesteps; ++t) {
        Rng rng(mix_seed(config_.seed, 0x100u + static_cast<std::uint64_t>(t)));
        a_.push_back(scaled_to_norm(rng.normal_matrix(d, d), config_.noise_matrix_norm));
        b_.push_back(scaled_to_norm(rng.normal_matrix(d, m), config_.embedding_matrix_norm));
        c_.push_back(config_.offset_scale * rng.normal_vector(d));
    }
    Rng attn_rng(mix_seed(config_.seed, 0x9000u));
    w_query_ = config_.attn_weight_scale *
               attn_rng.normal_matrix(token_dim(), config_.attn_dim);
    w_key_ = config_.attn_weight_scale *
             attn_rng.normal_matrix(token_dim(), config_.attn_dim);
}

int ToyBackend::check_timestep(int t) const {
    if (t < 1 || t > config_.num_timesteps)
        throw BackendError("toy backend: timestep " + std::to_string(t) +
                           " outside [1, " + std::to_string(config_.num_timesteps) + "]");
    return t - 1;
}

std::vector<AttentionSite> ToyBackend::attention_sites() const {
    return {AttentionSite{0, 1, config_.num_tokens}};
}

Eigen::VectorXd ToyBackend::initial_null_embedding() const {
    return Eigen::VectorXd::Zero(config_.embedding_dim);
}

Eigen::VectorXd ToyBackend::predict_noise(const Eigen::VectorXd& z, int t,
                                          const Eigen::VectorXd& e) const {
    require_latent(z);
    require_embedding(e);
    const int i = check_timestep(t);
    return a_[i] * z + b_[i] * e + c_[i];
}

Eigen::VectorXd ToyBackend::predict_noise_vjp_z(const Eigen::VectorXd& z, int t,
                                                const Eigen::VectorXd& e,
                                                const Eigen::VectorXd& cot) const {
    require_latent(z);
    require_embedding(e);
    require_latent(cot);
    return a_[check_timestep(t)].transpose() * cot;
}

Eigen::VectorXd ToyBackend::predict_noise_vjp_e(const Eigen::VectorXd& z, int t,
                                                const Eigen::VectorXd& e,
                                                const Eigen::VectorXd& cot) const {
    require_latent(z);
    require_embedding(e);
    require_latent(cot);
    return b_[check_timestep(t)].transpose() * cot;
}

Eigen::MatrixXd ToyBackend::tokens(const Eigen::VectorXd& z) const {
    // token r = z.segment(r * token_dim, token_dim)
    return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                          Eigen::RowMajor>>(
        z.data(), config_.num_tokens, token_dim());
}

std::vector<Eigen::MatrixXd> ToyBackend::capture_attention(
    const Eigen::VectorXd& z, int t, const Eigen::VectorXd& e) const {
    require_latent(z);
    require_embedding(e);
    check_timestep(t);
    const Eigen::MatrixXd x = tokens(z);
    const Eigen::MatrixXd q = x * w_query_;
    const Eigen::MatrixXd k = x * w_key_;
    Eigen::MatrixXd logits = q * k.transpose() / std::sqrt(double(config_.attn_dim));
    Eigen::MatrixXd map(logits.rows(), logits.cols());
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const double mx = logits.row(r).maxCoeff();
        Eigen::ArrayXd ex = (logits.row(r).array() - mx).exp();
        map.row(r) = (ex / ex.sum()).matrix();
    }
    return {std::move(map)};
}

Eigen::VectorXd ToyBackend::attention_vjp_z(
    const Eigen::VectorXd& z, int t, const Eigen::VectorXd& e,
    const std::vector<Eigen::MatrixXd>& cot) const {
    require_latent(z);
    require_embedding(e);
    if (cot.size() != 1)
        throw BackendError("toy backend exposes exactly one attention map");
    const auto maps = capture_attention(z, t, e);
    const Eigen::MatrixXd& s = maps[0];
    const Eigen::MatrixXd& g = cot[0];
    if (g.rows() != s.rows() || g.cols() != s.cols())
        throw BackendError("attention cotangent shape mismatch");

    // backprop through row-wise softmax
    Eigen::MatrixXd dlogits(s.rows(), s.cols());
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
        const double inner = g.row(r).dot(s.row(r));
        dlogits.row(r) = s.row(r).cwiseProduct(g.row(r) - Eigen::RowVectorXd::Constant(s.cols(), inner));
    }
    const double inv_sqrt = 1.0 / std::sqrt(double(config_.attn_dim));
    const Eigen::MatrixXd x = tokens(z);
    const Eigen::MatrixXd q = x * w_query_;
    const Eigen::MatrixXd k = x * w_key_;
    const Eigen::MatrixXd dq = dlogits * k * inv_sqrt;
    const Eigen::MatrixXd dk = dlogits.transpose() * q * inv_sqrt;
    const Eigen::MatrixXd dx = dq * w_query_.transpose() + dk * w_key_.transpose();

    Eigen::VectorXd dz(config_.latent_dim);
    for (int r = 0; r < config_.num_tokens; ++r)
        dz.segment(static_cast<Eigen::Index>(r) * token_dim(), token_dim()) =
            dx.row(r).transpose();
    return dz;
}

const Eigen::MatrixXd& ToyBackend::noise_matrix(int t) const {
    return a_[static_cast<std::size_t>(check_timestep(t))];
}
const Eigen::MatrixXd& ToyBackend::embedding_matrix(int t) const {
    return b_[static_cast<std::size_t>(check_timestep(t))];
}
const Eigen::VectorXd& ToyBackend::noise_offset(int t) const {
    return c_[static_cast<std::size_t>(check_timestep(t))];
}

} // namespace latentcloak
