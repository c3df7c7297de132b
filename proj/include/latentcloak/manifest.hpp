#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "latentcloak/surrogates.hpp"

namespace latentcloak {

struct ManifestEntry {
    std::string source_image_path;
    int group_id = 1;
    std::string target_train_path;
    std::string target_test_path;
};

/// Dataset description: every entry impersonates its group's target
/// identity, and each group carries exactly one (train, test) target pair.
struct DatasetManifest {
    std::vector<ManifestEntry> entries;

    /// Parses, resolves paths relative to the manifest file, checks that all
    /// referenced files exist and that the group structure is consistent.
    static DatasetManifest load(const std::string& path);
    static DatasetManifest from_json(const nlohmann::json& doc,
                                     const std::string& base_dir);

    std::string to_json() const;

    /// Stable digest over the resolved entry list.
    std::uint64_t digest() const;
};

/// Feature extractors declared in a JSON registry file, plus the
/// leave-one-out split used by the evaluation protocol.
struct ModelRegistry {
    std::map<std::string, std::shared_ptr<FeatureExtractor>> models;
    std::vector<std::string> train_ids;
    std::string holdout_id;

    static ModelRegistry load(const std::string& path);
    static ModelRegistry from_json(const nlohmann::json& doc);

    std::shared_ptr<FeatureExtractor> at(const std::string& id) const;
    SurrogateEnsemble train_ensemble() const;
};

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a(const std::string& text, std::uint64_t seed = 0xcbf29ce484222325ULL);

} // namespace latentcloak
