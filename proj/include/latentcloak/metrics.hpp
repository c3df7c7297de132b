#pragma once

#include <Eigen/Dense>

#include <vector>

#include "latentcloak/image.hpp"
#include "latentcloak/surrogates.hpp"

namespace latentcloak {

struct PsnrResult {
    double db = 0.0;
    bool infinite = false;  // identical inputs; db then holds the cap
};

inline constexpr double kPsnrCapDb = 200.0;

/// 20 log10(max_val / RMSE). Identical images return the cap with the
/// infinite flag set.
PsnrResult psnr(const Image& a, const Image& b, double max_val = 1.0);

/// Gaussian-window SSIM, window 11, sigma 1.5, C1 = (0.01 L)^2,
/// C2 = (0.03 L)^2, mean over valid window positions and channels. For
/// images smaller than the window the largest odd window that fits is used.
double ssim(const Image& a, const Image& b, double max_val = 1.0);

/// The window ssim() will use for this shape.
int ssim_window_for(ImageShape shape);

struct ScoreSet {
    std::vector<double> genuine;
    std::vector<double> impostor;
};

struct ThresholdResult {
    double tau = 1.0;
    double empirical_far = 0.0;
    bool low_sample_warning = false;  // fewer than 100 impostor scores
};

/// Smallest tau such that the fraction of impostor scores strictly above it
/// is at most `far`. Ties count as rejection.
ThresholdResult calibrate_threshold(const ScoreSet& scores, double far = 0.01);

/// 100 * fraction of similarities strictly above tau.
double psr_percent(const std::vector<double>& similarities, double tau);

/// Similarity of each protected image to the target test image under one
/// model, then the PSR at tau.
double psr_percent(const std::vector<Image>& protected_images,
                   const Image& target_test, const FeatureExtractor& model,
                   double tau);

/// Frechet distance |mu_a - mu_b|^2 + tr(Sa + Sb - 2 (Sa Sb)^(1/2)) between
/// Gaussian fits. Covariances are unbiased sample estimates with 1e-6
/// diagonal shrinkage; singleton sets get the shrinkage diagonal alone.
double fid(const std::vector<Eigen::VectorXd>& features_a,
           const std::vector<Eigen::VectorXd>& features_b);

} // namespace latentcloak
