#include "latentcloak/attention.hpp"

namespace latentcloak {

bool AttentionMapSet::same_keys(const AttentionMapSet& other) const {
    if (maps.size() != other.maps.size()) return false;
    auto it = maps.begin();
    auto jt = other.maps.begin();
    for (; it != maps.end(); ++it, ++jt)
        if (it->first != jt->first) return false;
    return true;
}

std::vector<AttentionKey> attention_keys_for(const DenoiserBackend& backend,
                                             int t, const SiteFilter& filter) {
    std::vector<AttentionKey> keys;
    for (const auto& site : backend.attention_sites())
        for (int h = 0; h < site.head_count; ++h)
            if (filter.selects(site.layer_id))
                keys.push_back(AttentionKey{t, site.layer_id, h});
    return keys;
}

namespace {

// Filtered capture in backend map order alongside the flat keys.
void capture_filtered(const DenoiserBackend& backend, const Eigen::VectorXd& z,
                      int t, const Eigen::VectorXd& e, const SiteFilter& filter,
                      AttentionMapSet& out) {
    const auto maps = backend.capture_attention(z, t, e);
    std::size_t idx = 0;
    for (const auto& site : backend.attention_sites())
        for (int h = 0; h < site.head_count; ++h, ++idx)
            if (filter.selects(site.layer_id))
                out.maps[AttentionKey{t, site.layer_id, h}] = maps[idx];
}

} // namespace

AttentionMapSet record_reference_maps(const UncondEmbeddingSet& set,
                                      const DenoiserBackend& backend,
                                      const SiteFilter& filter) {
    if (set.bar_latents.empty())
        throw AttentionError("record_reference_maps: empty committed path");
    bool any_selected = false;
    for (const auto& site : backend.attention_sites())
        any_selected = any_selected || filter.selects(site.layer_id);
    if (!any_selected)
        throw AttentionError("site filter selects no attention sites");

    AttentionMapSet out;
    for (const auto& z_bar : set.bar_latents) {
        const int t = z_bar.timestep;
        if (t < 1) continue;  // maps are captured at sampling inputs only
        const auto& emb = set.embeddings.at(t);
        capture_filtered(backend, z_bar.values, t, emb.values, filter, out);
    }
    return out;
}

double structure_loss(const AttentionMapSet& adv, const AttentionMapSet& ref,
                      StructureAggregation agg) {
    if (!adv.same_keys(ref))
        throw AttentionError("structure_loss: key sets differ");
    if (adv.maps.empty()) throw AttentionError("structure_loss: empty map sets");
    double acc = 0.0;
    for (const auto& [key, map] : adv.maps) {
        const Eigen::MatrixXd diff = map - ref.maps.at(key);
        const double sq = diff.squaredNorm();
        acc += agg == StructureAggregation::sum
                   ? sq
                   : sq / static_cast<double>(diff.size());
    }
    if (agg == StructureAggregation::mean_per_map)
        acc /= static_cast<double>(adv.maps.size());
    return acc;
}

std::map<AttentionKey, Eigen::MatrixXd> structure_loss_cotangents(
    const AttentionMapSet& adv, const AttentionMapSet& ref,
    StructureAggregation agg) {
    if (!adv.same_keys(ref))
        throw AttentionError("structure_loss: key sets differ");
    std::map<AttentionKey, Eigen::MatrixXd> cots;
    const double n_keys = static_cast<double>(adv.maps.size());
    for (const auto& [key, map] : adv.maps) {
        Eigen::MatrixXd g = 2.0 * (map - ref.maps.at(key));
        if (agg == StructureAggregation::mean_per_map)
            g /= static_cast<double>(map.size()) * n_keys;
        cots[key] = std::move(g);
    }
    return cots;
}

SvdComponents svd_components(const Eigen::MatrixXd& map, int k) {
    const int bound = static_cast<int>(std::min(map.rows(), map.cols()));
    if (k < 1 || k > bound)
        throw AttentionError("svd_components: k outside [1, " +
                             std::to_string(bound) + "]");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(map, Eigen::ComputeThinU | Eigen::ComputeThinV);
    SvdComponents out;
    out.singular_values = svd.singularValues();
    out.components.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i)
        out.components.push_back(out.singular_values[i] * svd.matrixU().col(i) *
                                 svd.matrixV().col(i).transpose());
    return out;
}

} // namespace latentcloak
