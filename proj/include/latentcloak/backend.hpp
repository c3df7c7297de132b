#pragma once

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "latentcloak/errors.hpp"
#include "latentcloak/image.hpp"

namespace latentcloak {

/// One self-attention location exposed by a denoiser.
struct AttentionSite {
    int layer_id = 0;
    int head_count = 1;
    int token_count = 0;
};

/// The conditioning vector used in place of a text prompt.
struct UncondEmbedding {
    Eigen::VectorXd values;
    int timestep = 0;
};

/// Noise-prediction model eps(z, t, e) with a vector-Jacobian gradient
/// contract. Implementations may use analytic Jacobians or delegate to an
/// autodiff capability; callers only rely on the VJP calls below. Backends
/// are immutable after construction and safe for concurrent reads.
class DenoiserBackend {
public:
    virtual ~DenoiserBackend() = default;

    virtual std::string id() const = 0;
    virtual int latent_dim() const = 0;
    virtual int embedding_dim() const = 0;
    virtual int num_timesteps() const = 0;
    virtual std::vector<AttentionSite> attention_sites() const = 0;

    /// Embedding used before any null-text learning has happened.
    virtual Eigen::VectorXd initial_null_embedding() const = 0;

    virtual Eigen::VectorXd predict_noise(const Eigen::VectorXd& z, int t,
                                          const Eigen::VectorXd& e) const = 0;

    /// cot^T * d eps / d z
    virtual Eigen::VectorXd predict_noise_vjp_z(const Eigen::VectorXd& z, int t,
                                                const Eigen::VectorXd& e,
                                                const Eigen::VectorXd& cot) const = 0;

    /// cot^T * d eps / d e
    virtual Eigen::VectorXd predict_noise_vjp_e(const Eigen::VectorXd& z, int t,
                                                const Eigen::VectorXd& e,
                                                const Eigen::VectorXd& cot) const = 0;

    /// Row-stochastic self-attention maps, one matrix per (site, head) in
    /// site-major order. Backends without attention sites return an empty
    /// vector and declare no sites.
    virtual std::vector<Eigen::MatrixXd> capture_attention(
        const Eigen::VectorXd& z, int t, const Eigen::VectorXd& e) const = 0;

    /// sum over maps of cot_m : d map_m / d z
    virtual Eigen::VectorXd attention_vjp_z(
        const Eigen::VectorXd& z, int t, const Eigen::VectorXd& e,
        const std::vector<Eigen::MatrixXd>& cot) const = 0;

    void require_latent(const Eigen::VectorXd& z) const {
        if (z.size() != latent_dim())
            throw BackendError(id() + ": latent size " + std::to_string(z.size()) +
                               " != " + std::to_string(latent_dim()));
    }
    void require_embedding(const Eigen::VectorXd& e) const {
        if (e.size() != embedding_dim())
            throw BackendError(id() + ": embedding size " + std::to_string(e.size()) +
                               " != " + std::to_string(embedding_dim()));
    }
};

/// Optional capability: denoisers of the form eps(z,t,e) = A_t z + B_t e + c_t
/// expose their coefficients, which makes the per-timestep embedding problem
/// an exact least-squares instance.
class AffineDenoiser {
public:
    virtual ~AffineDenoiser() = default;
    virtual const Eigen::MatrixXd& noise_matrix(int t) const = 0;      // A_t
    virtual const Eigen::MatrixXd& embedding_matrix(int t) const = 0;  // B_t
    virtual const Eigen::VectorXd& noise_offset(int t) const = 0;      // c_t
};

inline const AffineDenoiser* as_affine(const DenoiserBackend& backend) {
    return dynamic_cast<const AffineDenoiser*>(&backend);
}

/// Encoder/decoder pair between pixel space and latent space.
/// decode clamps to [0,1]; its VJP applies the matching mask.
class LatentCodec {
public:
    virtual ~LatentCodec() = default;

    virtual std::string id() const = 0;
    virtual ImageShape image_shape() const = 0;
    virtual int latent_dim() const = 0;

    /// Declared round-trip tolerance: |decode(encode(x)) - x|_2 <= rho.
    virtual double round_trip_tolerance() const = 0;

    virtual Eigen::VectorXd encode(const Image& x) const = 0;
    virtual Image decode(const Eigen::VectorXd& z) const = 0;

    /// cot^T * d decode / d z, cot given as a flat image-sized vector.
    virtual Eigen::VectorXd decode_vjp(const Eigen::VectorXd& z,
                                       const Eigen::VectorXd& cot) const = 0;
};

} // namespace latentcloak
