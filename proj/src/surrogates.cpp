#include "latentcloak/surrogates.hpp"

#include <set>

#include "latentcloak/rng.hpp"

namespace latentcloak {

std::shared_ptr<FaceAligner> make_aligner(const std::string& name) {
    if (name == "identity") return std::make_shared<IdentityAligner>();
    if (name == "external") return std::make_shared<ExternalAligner>();
    throw SurrogateError("unknown aligner: " + name);
}

ToyEmbedder::ToyEmbedder(const Config& config)
    : config_(config), aligner_(make_aligner(config.aligner)) {
    if (config_.feature_dim < 1)
        throw SurrogateError("feature_dim must be positive");
    if (config_.family_weight < 0.0 || config_.family_weight > 1.0)
        throw SurrogateError("family_weight must lie in [0,1]");
    const int n = config_.input_shape.size();
    Rng shared(mix_seed(config_.family_seed, 0xfa));
    Rng own(mix_seed(config_.seed, 0xfb));
    const Eigen::MatrixXd base = shared.normal_matrix(config_.feature_dim, n);
    const Eigen::MatrixXd indiv = own.normal_matrix(config_.feature_dim, n);
    const double w = config_.family_weight;
    weights_ = (w * base + (1.0 - w) * indiv) / std::sqrt(static_cast<double>(n));
}

Image ToyEmbedder::preprocess(const Image& x) const {
    Image aligned = aligner_->align(x);
    if (!(aligned.shape == config_.input_shape))
        throw SurrogateError(config_.id + ": image shape after preprocessing is " +
                             std::to_string(aligned.shape.height) + "x" +
                             std::to_string(aligned.shape.width) + "x" +
                             std::to_string(aligned.shape.channels) +
                             ", expected " + std::to_string(config_.input_shape.height) +
                             "x" + std::to_string(config_.input_shape.width) + "x" +
                             std::to_string(config_.input_shape.channels));
    return aligned;
}

Eigen::VectorXd ToyEmbedder::extract(const Image& x) const {
    return weights_ * preprocess(x).flatten();
}

Eigen::VectorXd ToyEmbedder::extract_vjp(const Image& x,
                                         const Eigen::VectorXd& cot) const {
    preprocess(x);  // shape contract also applies to gradient queries
    if (cot.size() != config_.feature_dim)
        throw SurrogateError("extract_vjp: cotangent size mismatch");
    return weights_.transpose() * cot;
}

void SurrogateEnsemble::validate() const {
    if (extractors.empty())
        throw SurrogateError("ensemble must contain at least one extractor");
    std::set<std::string> ids;
    for (const auto& ex : extractors) {
        if (!ex) throw SurrogateError("ensemble contains a null extractor");
        if (!ids.insert(ex->id()).second)
            throw SurrogateError("duplicate extractor id: " + ex->id());
    }
}

namespace {

void require_nonzero(const Eigen::VectorXd& f, const char* which) {
    if (f.norm() == 0.0)
        throw SurrogateError(std::string("cosine_distance: ") + which +
                             " has zero norm");
}

} // namespace

double cosine_similarity(const Eigen::VectorXd& f1, const Eigen::VectorXd& f2) {
    if (f1.size() != f2.size())
        throw SurrogateError("cosine: dimension mismatch");
    require_nonzero(f1, "first argument");
    require_nonzero(f2, "second argument");
    return f1.dot(f2) / (f1.norm() * f2.norm());
}

double cosine_distance(const Eigen::VectorXd& f1, const Eigen::VectorXd& f2) {
    return 1.0 - cosine_similarity(f1, f2);
}

Eigen::VectorXd cosine_distance_grad(const Eigen::VectorXd& f1,
                                     const Eigen::VectorXd& f2) {
    require_nonzero(f1, "first argument");
    require_nonzero(f2, "second argument");
    const double n1 = f1.norm();
    const double n2 = f2.norm();
    const double cos = f1.dot(f2) / (n1 * n2);
    // d(1 - cos)/d f1
    return -(f2 / (n1 * n2) - cos * f1 / (n1 * n1));
}

std::vector<Eigen::VectorXd> ensemble_features(const SurrogateEnsemble& ens,
                                               const Image& x) {
    ens.validate();
    std::vector<Eigen::VectorXd> out;
    out.reserve(ens.extractors.size());
    for (const auto& ex : ens.extractors) out.push_back(ex->extract(x));
    return out;
}

double adversarial_loss(const Image& x_p,
                        const std::vector<Eigen::VectorXd>& target_features,
                        const SurrogateEnsemble& ens) {
    ens.validate();
    if (target_features.size() != ens.extractors.size())
        throw SurrogateError("target feature count != ensemble size");
    double acc = 0.0;
    for (std::size_t k = 0; k < ens.extractors.size(); ++k)
        acc += cosine_distance(ens.extractors[k]->extract(x_p), target_features[k]);
    return acc / static_cast<double>(ens.extractors.size());
}

double adversarial_loss(const Image& x_p, const Image& x_t,
                        const SurrogateEnsemble& ens) {
    return adversarial_loss(x_p, ensemble_features(ens, x_t), ens);
}

Eigen::VectorXd adversarial_loss_grad(
    const Image& x_p, const std::vector<Eigen::VectorXd>& target_features,
    const SurrogateEnsemble& ens) {
    ens.validate();
    if (target_features.size() != ens.extractors.size())
        throw SurrogateError("target feature count != ensemble size");
    const double inv_k = 1.0 / static_cast<double>(ens.extractors.size());
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(x_p.flatten().size());
    for (std::size_t k = 0; k < ens.extractors.size(); ++k) {
        const Eigen::VectorXd f = ens.extractors[k]->extract(x_p);
        const Eigen::VectorXd df = inv_k * cosine_distance_grad(f, target_features[k]);
        grad += ens.extractors[k]->extract_vjp(x_p, df);
    }
    return grad;
}

double obfuscation_loss(const Image& x_p, const Image& x_src,
                        const Image& x_t_synth, const SurrogateEnsemble& ens,
                        double w_obf) {
    if (w_obf < 0.0) throw SurrogateError("w_obf must be >= 0");
    double loss = adversarial_loss(x_p, x_t_synth, ens);
    if (w_obf != 0.0) loss -= w_obf * adversarial_loss(x_p, x_src, ens);
    return loss;
}

} // namespace latentcloak
