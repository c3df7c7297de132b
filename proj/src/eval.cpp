#include "latentcloak/eval.hpp"

#include <fstream>

#include "latentcloak/csv.hpp"

namespace latentcloak {

Image apply_named_kernel(const Image& img, const std::string& kernel) {
    if (kernel == "none") return img;
    auto parse_size = [&](std::size_t prefix_len) {
        const int k = std::stoi(kernel.substr(prefix_len));
        if (k < 1 || k % 2 == 0)
            throw MetricError("kernel size must be odd: " + kernel);
        return k;
    };
    if (kernel.rfind("gauss", 0) == 0) return gaussian_blur(img, parse_size(5));
    if (kernel.rfind("mean", 0) == 0) return mean_filter(img, parse_size(4));
    throw MetricError("unknown smoothing kernel: " + kernel);
}

std::vector<SmoothingRow> smoothing_robustness(
    const std::vector<Image>& protected_set, const Image& target_test,
    const FeatureExtractor& model, double tau,
    const std::vector<std::string>& kernels) {
    std::vector<SmoothingRow> rows;
    rows.reserve(kernels.size());
    for (const auto& kernel : kernels) {
        std::vector<Image> filtered;
        filtered.reserve(protected_set.size());
        for (const auto& img : protected_set)
            filtered.push_back(apply_named_kernel(img, kernel));
        rows.push_back(SmoothingRow{
            kernel, psr_percent(filtered, target_test, model, tau)});
    }
    return rows;
}

std::vector<PurificationVariant> default_purification_variants() {
    return {{"with_both", true, true},
            {"without_null", false, true},
            {"without_attention", true, false},
            {"without_both", false, false}};
}

std::vector<PurificationPoint> purification_survival(
    const ProtectionSetup& setup, const std::vector<Image>& images,
    const std::vector<int>& t_grid,
    const std::vector<PurificationVariant>& variants) {
    if (images.empty()) throw MetricError("purification_survival: empty image set");

    const Eigen::VectorXd target_feat = setup.eval_model->extract(setup.target_test);
    std::vector<Eigen::VectorXd> clean_feats;
    clean_feats.reserve(images.size());
    for (const auto& img : images)
        clean_feats.push_back(setup.eval_model->extract(img));

    std::vector<PurificationPoint> points;
    for (int t : t_grid)
        for (const auto& variant : variants) {
            ProtectionConfig cfg = setup.cfg;
            cfg.t_start = t;
            if (!variant.with_null) cfg.null_iters = 0;
            if (!variant.with_attention) cfg.structure_weight = 0.0;

            PurificationPoint point;
            point.t_start = t;
            point.variant = variant.name;
            std::vector<Eigen::VectorXd> protected_feats;
            protected_feats.reserve(images.size());
            for (std::size_t i = 0; i < images.size(); ++i) {
                const auto result =
                    protect(images[i], setup.target_train, cfg, *setup.backend,
                            *setup.codec, setup.train_ensemble, setup.sched);
                const Eigen::VectorXd f =
                    setup.eval_model->extract(result.protected_image);
                protected_feats.push_back(f);
                point.per_image_similarity.push_back(
                    cosine_similarity(f, target_feat));
                point.per_image_fid_proxy.push_back(fid({f}, {clean_feats[i]}));
            }
            point.psr_proxy = psr_percent(point.per_image_similarity, setup.tau);
            point.fid_proxy = fid(protected_feats, clean_feats);
            points.push_back(std::move(point));
        }
    return points;
}

std::vector<LambdaRow> lambda_sweep(const ProtectionSetup& setup,
                                    const std::vector<Image>& images,
                                    const std::vector<double>& grid) {
    if (images.empty()) throw MetricError("lambda_sweep: empty image set");
    for (double lambda : grid)
        if (lambda <= 0.0)
            throw MetricError("lambda_sweep: lambda must be positive");

    const Eigen::VectorXd target_feat = setup.eval_model->extract(setup.target_test);
    std::vector<Eigen::VectorXd> clean_feats;
    clean_feats.reserve(images.size());
    for (const auto& img : images)
        clean_feats.push_back(setup.eval_model->extract(img));

    std::vector<LambdaRow> rows;
    for (double lambda : grid) {
        ProtectionConfig cfg = setup.cfg;
        cfg.lambda_adv = lambda;

        LambdaRow row;
        row.lambda = lambda;
        std::vector<Eigen::VectorXd> protected_feats;
        std::vector<double> sims;
        for (const auto& img : images) {
            const auto result = protect(img, setup.target_train, cfg,
                                        *setup.backend, *setup.codec,
                                        setup.train_ensemble, setup.sched);
            row.adv_reduction += result.loss_curve.front().adv -
                                 result.loss_curve.back().adv;
            row.structure_final += result.loss_curve.back().str;
            const Eigen::VectorXd f =
                setup.eval_model->extract(result.protected_image);
            protected_feats.push_back(f);
            sims.push_back(cosine_similarity(f, target_feat));
        }
        const double n = static_cast<double>(images.size());
        row.adv_reduction /= n;
        row.structure_final /= n;
        row.psr_proxy = psr_percent(sims, setup.tau);
        row.fid_proxy = fid(protected_feats, clean_feats);
        rows.push_back(row);
    }
    return rows;
}

namespace {

std::ofstream open_csv(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    return out;
}

} // namespace

void write_smoothing_csv(const std::vector<SmoothingRow>& rows,
                         const std::string& path) {
    auto out = open_csv(path);
    out << "kernel,psr\n";
    for (const auto& r : rows)
        out << r.kernel << ',' << format_full(r.psr) << '\n';
}

void write_purification_csv(const std::vector<PurificationPoint>& rows,
                            const std::string& path) {
    auto out = open_csv(path);
    out << "t,variant,psr_proxy,fid_proxy\n";
    for (const auto& r : rows)
        out << r.t_start << ',' << r.variant << ',' << format_full(r.psr_proxy)
            << ',' << format_full(r.fid_proxy) << '\n';
}

void write_purification_detail_csv(const std::vector<PurificationPoint>& rows,
                                   const std::string& path) {
    auto out = open_csv(path);
    out << "t,variant,image_index,similarity,fid_proxy_single\n";
    for (const auto& r : rows)
        for (std::size_t i = 0; i < r.per_image_similarity.size(); ++i)
            out << r.t_start << ',' << r.variant << ',' << i << ','
                << format_full(r.per_image_similarity[i]) << ','
                << format_full(r.per_image_fid_proxy[i]) << '\n';
}

void write_lambda_csv(const std::vector<LambdaRow>& rows,
                      const std::string& path) {
    auto out = open_csv(path);
    out << "lambda,adv_reduction,structure_final,psr_proxy,fid_proxy\n";
    for (const auto& r : rows)
        out << format_full(r.lambda) << ',' << format_full(r.adv_reduction)
            << ',' << format_full(r.structure_final) << ','
            << format_full(r.psr_proxy) << ',' << format_full(r.fid_proxy)
            << '\n';
}

} // namespace latentcloak
