#pragma once

#include <memory>
#include <string>
#include <vector>

#include "latentcloak/backend.hpp"
#include "latentcloak/image.hpp"

namespace latentcloak {

/// Face alignment hook. Real MTCNN-style alignment lives behind the
/// `external` entry and is not bundled; the toy pipeline uses `identity`.
class FaceAligner {
public:
    virtual ~FaceAligner() = default;
    virtual std::string id() const = 0;
    virtual Image align(const Image& x) const = 0;
};

class IdentityAligner final : public FaceAligner {
public:
    std::string id() const override { return "identity"; }
    Image align(const Image& x) const override { return x; }
};

class ExternalAligner final : public FaceAligner {
public:
    std::string id() const override { return "external"; }
    [[noreturn]] Image align(const Image&) const override {
        throw SurrogateError(
            "external aligner is an adapter interface; no detector is bundled");
    }
};

std::shared_ptr<FaceAligner> make_aligner(const std::string& name);

/// Differentiable identity-feature extractor.
class FeatureExtractor {
public:
    virtual ~FeatureExtractor() = default;
    virtual std::string id() const = 0;
    virtual ImageShape input_shape() const = 0;
    virtual int feature_dim() const = 0;

    virtual Eigen::VectorXd extract(const Image& x) const = 0;
    /// cot^T * d extract / d x, returned flat in image layout.
    virtual Eigen::VectorXd extract_vjp(const Image& x,
                                        const Eigen::VectorXd& cot) const = 0;
};

/// feature = W * flatten(align(x)). Weights mix a family-shared component
/// with a per-model one so that attacks fit on some members transfer to the
/// rest, which is what the leave-one-out protocol measures.
class ToyEmbedder final : public FeatureExtractor {
public:
    struct Config {
        std::string id = "toy";
        ImageShape input_shape{8, 8, 3};
        int feature_dim = 16;
        std::uint64_t seed = 1;
        std::uint64_t family_seed = 99;
        double family_weight = 0.7;  // in [0,1]
        std::string aligner = "identity";
    };

    explicit ToyEmbedder(const Config& config);

    std::string id() const override { return config_.id; }
    ImageShape input_shape() const override { return config_.input_shape; }
    int feature_dim() const override { return config_.feature_dim; }

    Eigen::VectorXd extract(const Image& x) const override;
    Eigen::VectorXd extract_vjp(const Image& x,
                                const Eigen::VectorXd& cot) const override;

    const Eigen::MatrixXd& weights() const { return weights_; }

private:
    Image preprocess(const Image& x) const;

    Config config_;
    std::shared_ptr<FaceAligner> aligner_;
    Eigen::MatrixXd weights_;  // feature_dim x image_dim
};

struct SurrogateEnsemble {
    std::vector<std::shared_ptr<FeatureExtractor>> extractors;

    int size() const { return static_cast<int>(extractors.size()); }
    void validate() const;
};

/// 1 - cos(f1, f2), in [0, 2]. Invariant to positive rescaling of either
/// argument; zero-norm inputs are rejected.
double cosine_distance(const Eigen::VectorXd& f1, const Eigen::VectorXd& f2);

double cosine_similarity(const Eigen::VectorXd& f1, const Eigen::VectorXd& f2);

/// d cosine_distance / d f1.
Eigen::VectorXd cosine_distance_grad(const Eigen::VectorXd& f1,
                                     const Eigen::VectorXd& f2);

/// Per-extractor features of one image, in ensemble order.
std::vector<Eigen::VectorXd> ensemble_features(const SurrogateEnsemble& ens,
                                               const Image& x);

/// (1/K) sum_k [1 - cos(F_k(x_p), F_k(x_t))].
double adversarial_loss(const Image& x_p, const Image& x_t,
                        const SurrogateEnsemble& ens);

/// Same, with the target features precomputed (they are fixed per run).
double adversarial_loss(const Image& x_p,
                        const std::vector<Eigen::VectorXd>& target_features,
                        const SurrogateEnsemble& ens);

/// d adversarial_loss / d x_p, flat in image layout.
Eigen::VectorXd adversarial_loss_grad(
    const Image& x_p, const std::vector<Eigen::VectorXd>& target_features,
    const SurrogateEnsemble& ens);

/// Impersonate a synthesized target while pushing away from the source:
/// mean_k[1 - cos(F_k(x_p), F_k(x_t))] - w_obf * mean_k[1 - cos(F_k(x_p), F_k(x_src))].
double obfuscation_loss(const Image& x_p, const Image& x_src,
                        const Image& x_t_synth, const SurrogateEnsemble& ens,
                        double w_obf);

} // namespace latentcloak
