#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "latentcloak/backend.hpp"

namespace latentcloak {

/// String-keyed backend factory. The default registry knows `toy` and
/// `ldm-adapter`; the latter is an interface-only entry that refuses to
/// construct without external model weights.
class BackendRegistry {
public:
    using Factory =
        std::function<std::shared_ptr<DenoiserBackend>(const nlohmann::json& params)>;

    void add(const std::string& backend_id, Factory factory);
    bool contains(const std::string& backend_id) const;
    std::shared_ptr<DenoiserBackend> create(const std::string& backend_id,
                                            const nlohmann::json& params) const;
    std::vector<std::string> ids() const;

private:
    std::map<std::string, Factory> factories_;
};

BackendRegistry& default_backend_registry();

/// Builds a codec from {"codec": "identity"|"linear", ...} given the image
/// shape the run operates on.
std::shared_ptr<LatentCodec> make_codec(const nlohmann::json& params,
                                        ImageShape shape);

} // namespace latentcloak
