#pragma once

#include <memory>
#include <string>
#include <vector>

#include "latentcloak/metrics.hpp"
#include "latentcloak/protector.hpp"

namespace latentcloak {

/// Everything a protection-and-scoring run needs: the generative pieces, the
/// white-box training ensemble, the held-out scoring model, and the decision
/// threshold calibrated on that model.
struct ProtectionSetup {
    std::shared_ptr<const DenoiserBackend> backend;
    std::shared_ptr<const LatentCodec> codec;
    SurrogateEnsemble train_ensemble;
    std::shared_ptr<const FeatureExtractor> eval_model;
    NoiseSchedule sched;
    ProtectionConfig cfg;
    Image target_train;
    Image target_test;
    double tau = 0.0;
};

/// "none", "gaussK" (odd K) or "meanK" (odd K).
Image apply_named_kernel(const Image& img, const std::string& kernel);

struct SmoothingRow {
    std::string kernel;
    double psr = 0.0;
};

/// PSR of the protected set against the target test image after each
/// smoothing countermeasure.
std::vector<SmoothingRow> smoothing_robustness(
    const std::vector<Image>& protected_set, const Image& target_test,
    const FeatureExtractor& model, double tau,
    const std::vector<std::string>& kernels = {"none", "gauss3", "gauss5",
                                               "gauss7", "mean5"});

struct PurificationVariant {
    std::string name;
    bool with_null = true;
    bool with_attention = true;
};

std::vector<PurificationVariant> default_purification_variants();

struct PurificationPoint {
    int t_start = 0;
    std::string variant;
    double psr_proxy = 0.0;
    double fid_proxy = 0.0;  // protected set vs clean set
    std::vector<double> per_image_similarity;
    std::vector<double> per_image_fid_proxy;  // singleton-set Frechet per image
};

/// Protects every image at each (t, variant) combination, holding everything
/// else in the setup fixed, and scores on the held-out model.
std::vector<PurificationPoint> purification_survival(
    const ProtectionSetup& setup, const std::vector<Image>& images,
    const std::vector<int>& t_grid = {1, 3, 5, 7},
    const std::vector<PurificationVariant>& variants =
        default_purification_variants());

struct LambdaRow {
    double lambda = 0.0;
    double adv_reduction = 0.0;    // mean initial - final adversarial loss
    double structure_final = 0.0;  // mean final structure loss
    double psr_proxy = 0.0;
    double fid_proxy = 0.0;
};

std::vector<LambdaRow> lambda_sweep(
    const ProtectionSetup& setup, const std::vector<Image>& images,
    const std::vector<double>& grid = {0.001, 0.003, 0.006, 0.01});

// Plot-ready CSV emitters; header rows are fixed.
void write_smoothing_csv(const std::vector<SmoothingRow>& rows,
                         const std::string& path);
void write_purification_csv(const std::vector<PurificationPoint>& rows,
                            const std::string& path);
void write_purification_detail_csv(const std::vector<PurificationPoint>& rows,
                                   const std::string& path);
void write_lambda_csv(const std::vector<LambdaRow>& rows,
                      const std::string& path);

} // namespace latentcloak
