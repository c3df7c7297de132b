#include "latentcloak/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace latentcloak {

PsnrResult psnr(const Image& a, const Image& b, double max_val) {
    if (!(a.shape == b.shape)) throw MetricError("psnr: shape mismatch");
    if (max_val <= 0.0) throw MetricError("psnr: max_val must be positive");
    const double mse = (a.data - b.data).squaredNorm() /
                       static_cast<double>(a.data.size());
    if (mse == 0.0) return PsnrResult{kPsnrCapDb, true};
    const double db = 20.0 * std::log10(max_val / std::sqrt(mse));
    return PsnrResult{std::min(db, kPsnrCapDb), false};
}

int ssim_window_for(ImageShape shape) {
    int w = std::min({11, shape.height, shape.width});
    if (w % 2 == 0) --w;
    return std::max(w, 1);
}

double ssim(const Image& a, const Image& b, double max_val) {
    if (!(a.shape == b.shape)) throw MetricError("ssim: shape mismatch");
    const auto& s = a.shape;
    const int w = ssim_window_for(s);
    const int r = w / 2;
    const double c1 = (0.01 * max_val) * (0.01 * max_val);
    const double c2 = (0.03 * max_val) * (0.03 * max_val);

    // canonical Gaussian window, sigma 1.5
    Eigen::MatrixXd win(w, w);
    const double sigma = 1.5;
    for (int i = 0; i < w; ++i)
        for (int j = 0; j < w; ++j) {
            const double dy = i - r, dx = j - r;
            win(i, j) = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
        }
    win /= win.sum();

    double acc = 0.0;
    long count = 0;
    for (int c = 0; c < s.channels; ++c)
        for (int y = r; y + r < s.height; ++y)
            for (int x = r; x + r < s.width; ++x) {
                double mu_a = 0, mu_b = 0;
                for (int i = -r; i <= r; ++i)
                    for (int j = -r; j <= r; ++j) {
                        const double g = win(i + r, j + r);
                        mu_a += g * a.at(y + i, x + j, c);
                        mu_b += g * b.at(y + i, x + j, c);
                    }
                double var_a = 0, var_b = 0, cov = 0;
                for (int i = -r; i <= r; ++i)
                    for (int j = -r; j <= r; ++j) {
                        const double g = win(i + r, j + r);
                        const double da = a.at(y + i, x + j, c) - mu_a;
                        const double db = b.at(y + i, x + j, c) - mu_b;
                        var_a += g * da * da;
                        var_b += g * db * db;
                        cov += g * da * db;
                    }
                const double num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
                const double den =
                    (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
                acc += num / den;
                ++count;
            }
    if (count == 0) throw MetricError("ssim: image smaller than any window");
    return acc / static_cast<double>(count);
}

ThresholdResult calibrate_threshold(const ScoreSet& scores, double far) {
    if (scores.impostor.empty())
        throw MetricError("calibrate_threshold: empty impostor set");
    if (far < 0.0 || far > 1.0)
        throw MetricError("calibrate_threshold: far outside [0,1]");
    ThresholdResult result;
    result.low_sample_warning = scores.impostor.size() < 100;

    std::vector<double> sorted = scores.impostor;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const auto n = static_cast<long>(sorted.size());
    const long allowed =
        static_cast<long>(std::floor(far * static_cast<double>(n) + 1e-9));
    if (allowed >= n) {
        result.tau = -1.0;  // everything accepted
    } else {
        result.tau = sorted[static_cast<std::size_t>(allowed)];
    }
    long above = 0;
    for (double v : scores.impostor)
        if (v > result.tau) ++above;
    result.empirical_far = static_cast<double>(above) / static_cast<double>(n);
    return result;
}

double psr_percent(const std::vector<double>& similarities, double tau) {
    if (similarities.empty()) throw MetricError("psr: empty similarity set");
    long above = 0;
    for (double v : similarities)
        if (v > tau) ++above;
    return 100.0 * static_cast<double>(above) /
           static_cast<double>(similarities.size());
}

double psr_percent(const std::vector<Image>& protected_images,
                   const Image& target_test, const FeatureExtractor& model,
                   double tau) {
    const Eigen::VectorXd target = model.extract(target_test);
    std::vector<double> sims;
    sims.reserve(protected_images.size());
    for (const auto& img : protected_images)
        sims.push_back(cosine_similarity(model.extract(img), target));
    return psr_percent(sims, tau);
}

namespace {

constexpr double kCovShrinkage = 1e-6;

void gaussian_fit(const std::vector<Eigen::VectorXd>& features,
                  Eigen::VectorXd& mu, Eigen::MatrixXd& cov) {
    const auto n = static_cast<Eigen::Index>(features.size());
    const Eigen::Index d = features.front().size();
    mu = Eigen::VectorXd::Zero(d);
    for (const auto& f : features) {
        if (f.size() != d) throw MetricError("fid: feature dimension mismatch");
        mu += f;
    }
    mu /= static_cast<double>(n);
    cov = Eigen::MatrixXd::Zero(d, d);
    if (n > 1) {
        for (const auto& f : features) {
            const Eigen::VectorXd c = f - mu;
            cov += c * c.transpose();
        }
        cov /= static_cast<double>(n - 1);
    }
    cov.diagonal().array() += kCovShrinkage;
}

Eigen::MatrixXd spd_sqrt(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    const Eigen::VectorXd roots =
        eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * roots.asDiagonal() *
           eig.eigenvectors().transpose();
}

} // namespace

double fid(const std::vector<Eigen::VectorXd>& features_a,
           const std::vector<Eigen::VectorXd>& features_b) {
    if (features_a.empty() || features_b.empty())
        throw MetricError("fid: empty feature set");
    if (features_a.front().size() != features_b.front().size())
        throw MetricError("fid: dimension mismatch between sets");

    Eigen::VectorXd mu_a, mu_b;
    Eigen::MatrixXd cov_a, cov_b;
    gaussian_fit(features_a, mu_a, cov_a);
    gaussian_fit(features_b, mu_b, cov_b);

    const Eigen::MatrixXd root_a = spd_sqrt(cov_a);
    const Eigen::MatrixXd inner = spd_sqrt(root_a * cov_b * root_a);
    const double dist = (mu_a - mu_b).squaredNorm() + cov_a.trace() +
                        cov_b.trace() - 2.0 * inner.trace();
    return std::max(dist, 0.0);
}

} // namespace latentcloak
