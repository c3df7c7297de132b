#include "latentcloak/manifest.hpp"

#include <filesystem>
#include <fstream>
#include <set>

namespace latentcloak {

namespace fs = std::filesystem;

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= bytes[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t fnv1a(const std::string& text, std::uint64_t seed) {
    return fnv1a(text.data(), text.size(), seed);
}

namespace {

nlohmann::json parse_file(const std::string& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw ConfigError(std::string(what) + " not readable: " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string(what) + " parse failure in " + path +
                          ": " + e.what());
    }
}

std::string resolve(const std::string& base_dir, const std::string& path) {
    fs::path p(path);
    if (p.is_absolute() || base_dir.empty()) return p.lexically_normal().string();
    return (fs::path(base_dir) / p).lexically_normal().string();
}

} // namespace

DatasetManifest DatasetManifest::load(const std::string& path) {
    const auto doc = parse_file(path, "manifest");
    return from_json(doc, fs::path(path).parent_path().string());
}

DatasetManifest DatasetManifest::from_json(const nlohmann::json& doc,
                                           const std::string& base_dir) {
    DatasetManifest manifest;
    if (!doc.contains("entries") || !doc.at("entries").is_array())
        throw ConfigError("manifest needs an 'entries' array");

    // group -> (train, test) target pair
    std::map<int, std::pair<std::string, std::string>> group_targets;
    for (const auto& item : doc.at("entries")) {
        ManifestEntry entry;
        entry.source_image_path =
            resolve(base_dir, item.at("source_image_path").get<std::string>());
        entry.group_id = item.at("group_id").get<int>();
        entry.target_train_path =
            resolve(base_dir, item.at("target_train_path").get<std::string>());
        entry.target_test_path =
            resolve(base_dir, item.at("target_test_path").get<std::string>());

        if (entry.group_id < 1 || entry.group_id > 4)
            throw ConfigError("manifest group_id must lie in [1,4], got " +
                              std::to_string(entry.group_id));
        for (const std::string* p :
             {&entry.source_image_path, &entry.target_train_path,
              &entry.target_test_path})
            if (!fs::exists(*p))
                throw ConfigError("manifest references missing file: " + *p);

        const auto pair = std::make_pair(entry.target_train_path,
                                         entry.target_test_path);
        auto [it, inserted] = group_targets.emplace(entry.group_id, pair);
        if (!inserted && it->second != pair)
            throw ConfigError("group " + std::to_string(entry.group_id) +
                              " lists more than one target pair");
        manifest.entries.push_back(std::move(entry));
    }
    return manifest;
}

std::string DatasetManifest::to_json() const {
    nlohmann::json doc;
    doc["entries"] = nlohmann::json::array();
    for (const auto& e : entries)
        doc["entries"].push_back({{"source_image_path", e.source_image_path},
                                  {"group_id", e.group_id},
                                  {"target_train_path", e.target_train_path},
                                  {"target_test_path", e.target_test_path}});
    return doc.dump(2);
}

std::uint64_t DatasetManifest::digest() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& e : entries) {
        h = fnv1a(e.source_image_path, h);
        h = fnv1a(&e.group_id, sizeof(e.group_id), h);
        h = fnv1a(e.target_train_path, h);
        h = fnv1a(e.target_test_path, h);
    }
    return h;
}

ModelRegistry ModelRegistry::load(const std::string& path) {
    return from_json(parse_file(path, "model registry"));
}

ModelRegistry ModelRegistry::from_json(const nlohmann::json& doc) {
    ModelRegistry registry;
    if (!doc.contains("models") || !doc.at("models").is_array())
        throw ConfigError("model registry needs a 'models' array");
    for (const auto& item : doc.at("models")) {
        const auto id = item.at("id").get<std::string>();
        const auto adapter = item.value("adapter", std::string("toy-linear"));
        if (adapter == "toy-linear") {
            ToyEmbedder::Config cfg;
            cfg.id = id;
            cfg.input_shape = ImageShape{item.value("height", 8),
                                         item.value("width", 8),
                                         item.value("channels", 3)};
            cfg.feature_dim = item.value("feature_dim", 16);
            cfg.seed = item.value("seed", std::uint64_t{1});
            cfg.family_seed = item.value("family_seed", std::uint64_t{99});
            cfg.family_weight = item.value("family_weight", 0.7);
            cfg.aligner = item.value("alignment", std::string("identity"));
            registry.models[id] = std::make_shared<ToyEmbedder>(cfg);
        } else {
            throw ConfigError("model adapter not available at desk scale: " +
                              adapter);
        }
    }
    if (doc.contains("split")) {
        const auto& split = doc.at("split");
        registry.train_ids = split.value("train", std::vector<std::string>{});
        registry.holdout_id = split.value("holdout", std::string{});
        for (const auto& id : registry.train_ids)
            if (!registry.models.count(id))
                throw ConfigError("split lists unknown model: " + id);
        if (!registry.holdout_id.empty() &&
            !registry.models.count(registry.holdout_id))
            throw ConfigError("split lists unknown holdout model: " +
                              registry.holdout_id);
    } else {
        for (const auto& [id, m] : registry.models) registry.train_ids.push_back(id);
    }
    return registry;
}

std::shared_ptr<FeatureExtractor> ModelRegistry::at(const std::string& id) const {
    auto it = models.find(id);
    if (it == models.end()) throw SurrogateError("unknown model id: " + id);
    return it->second;
}

SurrogateEnsemble ModelRegistry::train_ensemble() const {
    SurrogateEnsemble ens;
    for (const auto& id : train_ids) ens.extractors.push_back(at(id));
    ens.validate();
    return ens;
}

} // namespace latentcloak
