#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "latentcloak/protector.hpp"
#include "latentcloak/registry.hpp"

namespace latentcloak {

/// Everything a run needs, mirroring one JSON document so runs are diffable
/// and hashable.
struct RunConfig {
    ProtectionConfig protection;

    std::string backend_id = "toy";
    nlohmann::json backend_params = nlohmann::json::object();
    std::string codec_kind = "identity";
    nlohmann::json codec_params = nlohmann::json::object();

    std::string schedule_family = "linear";
    int schedule_train_steps = 0;  // 0 builds the T-step schedule directly
    double beta_min = 0.02;
    double beta_max = 0.12;

    int image_height = 8;
    int image_width = 8;
    int image_channels = 3;

    double far = 0.01;
    int jobs = 1;
    std::string models_file;

    ImageShape image_shape() const {
        return ImageShape{image_height, image_width, image_channels};
    }

    nlohmann::json to_json() const;
    static RunConfig from_json(const nlohmann::json& doc);
    static RunConfig load(const std::string& path);

    NoiseSchedule build_noise_schedule() const;
    std::shared_ptr<DenoiserBackend> build_backend() const;
    std::shared_ptr<LatentCodec> build_codec() const;

    std::uint64_t digest() const;
};

/// CLI-level settings layered over the config file; every field that is also
/// a CLI flag follows flag > file > default.
struct CliOverrides {
    std::optional<std::string> backend_id;
    std::optional<std::uint64_t> seed;
    std::optional<double> far;
    std::optional<int> jobs;
    std::optional<bool> full_inversion;
    std::optional<bool> keep_best;
    std::optional<std::string> models_file;
};

RunConfig apply_overrides(RunConfig cfg, const CliOverrides& overrides);

/// Files written per protected entry:
///   config.json, loss_curves.csv, protected.png, reconstruction.png,
///   reference_attention_digest.json, stats.json, embeddings/, done.digest
void write_protection_run(const std::string& dir, const ProtectedResult& result,
                          const nlohmann::json& config_echo,
                          std::uint64_t entry_digest);

bool run_is_complete(const std::string& dir, std::uint64_t entry_digest);

/// Write-once on-disk feature cache rooted at $LATENTCLOAK_CACHE; disabled
/// when the variable is unset.
class FeatureCache {
public:
    static FeatureCache from_env();
    explicit FeatureCache(std::string root) : root_(std::move(root)) {}

    bool enabled() const { return !root_.empty(); }
    std::optional<Eigen::VectorXd> get(const std::string& key) const;
    void put(const std::string& key, const Eigen::VectorXd& value) const;

private:
    std::string root_;
};

} // namespace latentcloak
