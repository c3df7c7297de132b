#pragma once

#include <memory>

#include "latentcloak/backend.hpp"

namespace latentcloak {

/// Latent space == pixel space; decode only clamps.
class IdentityCodec final : public LatentCodec {
public:
    explicit IdentityCodec(ImageShape shape) : shape_(shape) {}

    std::string id() const override { return "identity"; }
    ImageShape image_shape() const override { return shape_; }
    int latent_dim() const override { return shape_.size(); }
    double round_trip_tolerance() const override { return 0.0; }

    Eigen::VectorXd encode(const Image& x) const override;
    Image decode(const Eigen::VectorXd& z) const override;
    Eigen::VectorXd decode_vjp(const Eigen::VectorXd& z,
                               const Eigen::VectorXd& cot) const override;

private:
    ImageShape shape_;
};

/// Orthonormal projection codec centered at 0.5:
///   encode(x) = P (x - 0.5),  decode(z) = clamp(P^T z + 0.5)
/// with P having orthonormal rows. The round trip reproduces the component
/// of x - 0.5 inside the retained subspace; the error is the discarded
/// energy.
class LinearCodec final : public LatentCodec {
public:
    LinearCodec(ImageShape shape, int latent_dim, std::uint64_t seed);

    std::string id() const override { return "linear"; }
    ImageShape image_shape() const override { return shape_; }
    int latent_dim() const override { return static_cast<int>(projection_.rows()); }
    double round_trip_tolerance() const override;

    Eigen::VectorXd encode(const Image& x) const override;
    Image decode(const Eigen::VectorXd& z) const override;
    Eigen::VectorXd decode_vjp(const Eigen::VectorXd& z,
                               const Eigen::VectorXd& cot) const override;

    const Eigen::MatrixXd& projection() const { return projection_; }

private:
    ImageShape shape_;
    Eigen::MatrixXd projection_;  // latent_dim x image_dim, orthonormal rows
};

std::shared_ptr<LatentCodec> make_identity_codec(ImageShape shape);
std::shared_ptr<LatentCodec> make_linear_codec(ImageShape shape, int latent_dim,
                                               std::uint64_t seed);

} // namespace latentcloak
