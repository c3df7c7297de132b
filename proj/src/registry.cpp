#include "latentcloak/registry.hpp"

#include "latentcloak/codec.hpp"
#include "latentcloak/toy_backend.hpp"

namespace latentcloak {

void BackendRegistry::add(const std::string& backend_id, Factory factory) {
    factories_[backend_id] = std::move(factory);
}

bool BackendRegistry::contains(const std::string& backend_id) const {
    return factories_.count(backend_id) != 0;
}

std::shared_ptr<DenoiserBackend> BackendRegistry::create(
    const std::string& backend_id, const nlohmann::json& params) const {
    auto it = factories_.find(backend_id);
    if (it == factories_.end())
        throw BackendError("unknown backend id: " + backend_id);
    return it->second(params);
}

std::vector<std::string> BackendRegistry::ids() const {
    std::vector<std::string> out;
    out.reserve(factories_.size());
    for (const auto& [k, v] : factories_) out.push_back(k);
    return out;
}

BackendRegistry& default_backend_registry() {
    static BackendRegistry registry = [] {
        BackendRegistry r;
        r.add("toy", [](const nlohmann::json& params) {
            return std::make_shared<ToyBackend>(
                ToyBackendConfig::from_json(params.dump()));
        });
        r.add("ldm-adapter", [](const nlohmann::json&) -> std::shared_ptr<DenoiserBackend> {
            throw BackendError(
                "ldm-adapter requires external pretrained weights; none are "
                "bundled with this repository");
        });
        return r;
    }();
    return registry;
}

std::shared_ptr<LatentCodec> make_codec(const nlohmann::json& params,
                                        ImageShape shape) {
    const std::string kind = params.value("codec", "identity");
    if (kind == "identity") return make_identity_codec(shape);
    if (kind == "linear") {
        const int latent_dim = params.value("codec_latent_dim", shape.size());
        const std::uint64_t seed = params.value("codec_seed", std::uint64_t{0});
        return make_linear_codec(shape, latent_dim, seed);
    }
    throw ConfigError("unknown codec kind: " + kind);
}

} // namespace latentcloak
