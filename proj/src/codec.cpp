#include "latentcloak/codec.hpp"

#include <cmath>

#include "latentcloak/rng.hpp"

namespace latentcloak {

namespace {

Eigen::VectorXd masked_cotangent(const Eigen::VectorXd& pre_clamp,
                                 const Eigen::VectorXd& cot) {
    Eigen::VectorXd out(cot.size());
    for (Eigen::Index i = 0; i < cot.size(); ++i) {
        const bool inside = pre_clamp[i] >= 0.0 && pre_clamp[i] <= 1.0;
        out[i] = inside ? cot[i] : 0.0;
    }
    return out;
}

} // namespace

Eigen::VectorXd IdentityCodec::encode(const Image& x) const {
    if (x.shape != shape_) throw BackendError("identity codec: image shape mismatch");
    require_unit_range(x, "identity codec encode");
    return x.flatten();
}

Image IdentityCodec::decode(const Eigen::VectorXd& z) const {
    if (z.size() != shape_.size())
        throw BackendError("identity codec: latent size mismatch");
    return clamp01(Image::from_flat(shape_, z));
}

Eigen::VectorXd IdentityCodec::decode_vjp(const Eigen::VectorXd& z,
                                          const Eigen::VectorXd& cot) const {
    if (z.size() != shape_.size() || cot.size() != shape_.size())
        throw BackendError("identity codec: vjp size mismatch");
    return masked_cotangent(z, cot);
}

LinearCodec::LinearCodec(ImageShape shape, int latent_dim, std::uint64_t seed)
    : shape_(shape) {
    const int n = shape.size();
    if (latent_dim < 1 || latent_dim > n)
        throw BackendError("linear codec: latent_dim must be in [1, image size]");
    Rng rng(mix_seed(seed, 0xc0dec));
    const Eigen::MatrixXd g = rng.normal_matrix(n, latent_dim);
    const Eigen::MatrixXd q =
        Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ() *
        Eigen::MatrixXd::Identity(n, latent_dim);
    projection_ = q.transpose();  // orthonormal rows
}

double LinearCodec::round_trip_tolerance() const {
    // worst-case discarded energy for x in [0,1]^n
    return 0.5 * std::sqrt(static_cast<double>(shape_.size()));
}

Eigen::VectorXd LinearCodec::encode(const Image& x) const {
    if (x.shape != shape_) throw BackendError("linear codec: image shape mismatch");
    require_unit_range(x, "linear codec encode");
    return projection_ * (x.flatten().array() - 0.5).matrix();
}

Image LinearCodec::decode(const Eigen::VectorXd& z) const {
    if (z.size() != projection_.rows())
        throw BackendError("linear codec: latent size mismatch");
    Eigen::VectorXd pre = projection_.transpose() * z;
    pre.array() += 0.5;
    return clamp01(Image::from_flat(shape_, std::move(pre)));
}

Eigen::VectorXd LinearCodec::decode_vjp(const Eigen::VectorXd& z,
                                        const Eigen::VectorXd& cot) const {
    if (z.size() != projection_.rows() || cot.size() != shape_.size())
        throw BackendError("linear codec: vjp size mismatch");
    Eigen::VectorXd pre = projection_.transpose() * z;
    pre.array() += 0.5;
    return projection_ * masked_cotangent(pre, cot);
}

std::shared_ptr<LatentCodec> make_identity_codec(ImageShape shape) {
    return std::make_shared<IdentityCodec>(shape);
}

std::shared_ptr<LatentCodec> make_linear_codec(ImageShape shape, int latent_dim,
                                               std::uint64_t seed) {
    return std::make_shared<LinearCodec>(shape, latent_dim, seed);
}

} // namespace latentcloak
