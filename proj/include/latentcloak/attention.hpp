#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "latentcloak/backend.hpp"
#include "latentcloak/inversion.hpp"

namespace latentcloak {

struct AttentionKey {
    int timestep = 0;
    int layer = 0;
    int head = 0;
    auto operator<=>(const AttentionKey&) const = default;
};

/// Row-stochastic maps keyed by (timestep, layer, head).
struct AttentionMapSet {
    std::map<AttentionKey, Eigen::MatrixXd> maps;

    bool same_keys(const AttentionMapSet& other) const;
    std::size_t size() const { return maps.size(); }
};

/// Which exposed sites participate in the structure loss. An empty layer set
/// means "all layers".
struct SiteFilter {
    std::optional<std::set<int>> layers;

    bool selects(int layer) const {
        return !layers || layers->count(layer) != 0;
    }
};

/// Expands a backend's (site, head) order into flat keys for timestep t.
std::vector<AttentionKey> attention_keys_for(const DenoiserBackend& backend,
                                             int t, const SiteFilter& filter);

/// Captures S(z_bar_i) at every committed sampling input i = t_start..1,
/// stored without gradient linkage. Throws if the filter selects nothing.
AttentionMapSet record_reference_maps(const UncondEmbeddingSet& set,
                                      const DenoiserBackend& backend,
                                      const SiteFilter& filter = {});

enum class StructureAggregation {
    mean_per_map,  // mean over keys of per-map mean squared difference
    sum,           // raw sum of squared differences
};

/// Squared difference between adversarial and reference maps. Requires
/// identical key sets.
double structure_loss(const AttentionMapSet& adv, const AttentionMapSet& ref,
                      StructureAggregation agg = StructureAggregation::mean_per_map);

/// d structure_loss / d adv, one cotangent matrix per key.
std::map<AttentionKey, Eigen::MatrixXd> structure_loss_cotangents(
    const AttentionMapSet& adv, const AttentionMapSet& ref,
    StructureAggregation agg = StructureAggregation::mean_per_map);

struct SvdComponents {
    std::vector<Eigen::MatrixXd> components;  // rank-1 terms, descending sigma
    Eigen::VectorXd singular_values;          // all singular values
};

/// Top-k rank-1 components of a map via SVD.
SvdComponents svd_components(const Eigen::MatrixXd& map, int k);

} // namespace latentcloak
