#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "hga/graph.hpp"
#include "hga/parallel.hpp"

namespace hga {

enum class MetricKind { H, D };
enum class AggKind { Min, Max, Avg };

inline int indicator_slot(MetricKind m, AggKind a) {
    return 3 * static_cast<int>(m) + static_cast<int>(a);
}

inline const char* metric_name(MetricKind m) { return m == MetricKind::H ? "H" : "D"; }
inline const char* agg_name(AggKind a) {
    switch (a) {
        case AggKind::Min: return "min";
        case AggKind::Max: return "max";
        default: return "avg";
    }
}

struct RelationMetrics {
    std::optional<double> h;
    std::optional<double> d;
    int n = 0; // neighborhood size, labeled or not
};

struct AggTriple {
    std::optional<double> min, max, avg;
    bool defined() const { return min.has_value(); }
};

struct NodeStructuralProfile {
    NodeId node = -1;
    std::vector<RelationMetrics> per_relation; // aligned to graph.relations
    AggTriple h_agg, d_agg;
    std::optional<double> h_proj, d_proj;
    int n_proj = 0;

    // defined under at least one relation (the AuditTable eligibility gate)
    bool any_defined() const { return h_agg.defined() || d_agg.defined(); }
};

// Z_{M,A} = 1[M_proj < M_A], strict; slot order (H,min..avg),(D,min..avg).
struct IndicatorVector {
    NodeId node = -1;
    std::array<std::optional<int>, 6> z;
};

// Class frequencies over all labeled target-type nodes.
inline std::vector<double> global_label_distribution(const HeteroGraph& g) {
    std::vector<double> probs(g.num_classes, 0.0);
    long total = 0;
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
        if (g.is_labeled(v)) {
            probs[g.labels[v]] += 1.0;
            ++total;
        }
    }
    if (total == 0) throw InvalidInput("global_label_distribution: no labeled nodes");
    for (double& p : probs) p /= static_cast<double>(total);
    return probs;
}

// Fraction of labeled neighbors sharing v's label; nullopt when none.
inline std::optional<double> homophily(const HeteroGraph& g, NodeId v,
                                       const std::vector<NodeId>& neighbors) {
    if (!g.is_labeled(v)) throw InvalidInput("homophily: node " + std::to_string(v) + " is unlabeled");
    int labeled = 0, same = 0;
    for (NodeId u : neighbors) {
        if (!g.is_labeled(u)) continue;
        ++labeled;
        if (g.labels[u] == g.labels[v]) ++same;
    }
    if (labeled == 0) return std::nullopt;
    return static_cast<double>(same) / static_cast<double>(labeled);
}

// Empirical class distribution over labeled neighbors; nullopt when none.
inline std::optional<std::vector<double>> local_label_distribution(
    const HeteroGraph& g, const std::vector<NodeId>& neighbors) {
    std::vector<double> probs(g.num_classes, 0.0);
    int labeled = 0;
    for (NodeId u : neighbors) {
        if (!g.is_labeled(u)) continue;
        probs[g.labels[u]] += 1.0;
        ++labeled;
    }
    if (labeled == 0) return std::nullopt;
    for (double& p : probs) p /= static_cast<double>(labeled);
    return probs;
}

// Total variation distance, D = 1/2 sum |a_c - b_c|.
inline double tv_discrepancy(const std::vector<double>& local, const std::vector<double>& global) {
    if (local.size() != global.size())
        throw InvalidInput("tv_discrepancy: length mismatch");
    double s = 0;
    for (size_t c = 0; c < local.size(); ++c) s += std::abs(local[c] - global[c]);
    return 0.5 * s;
}

// min/max/arithmetic mean over defined relation values, summed in ascending
// relation order for determinism.
inline AggTriple aggregate_relations(const std::vector<std::optional<double>>& values) {
    AggTriple agg;
    double sum = 0;
    int count = 0;
    for (const auto& v : values) {
        if (!v) continue;
        if (count == 0) {
            agg.min = agg.max = *v;
        } else {
            agg.min = std::min(*agg.min, *v);
            agg.max = std::max(*agg.max, *v);
        }
        sum += *v;
        ++count;
    }
    if (count > 0) agg.avg = sum / count;
    return agg;
}

inline NodeStructuralProfile compute_profile(const HeteroGraph& g, const HomoProjection& proj,
                                             const std::vector<double>& global, NodeId v) {
    NodeStructuralProfile prof;
    prof.node = v;
    prof.per_relation.resize(g.num_relations());
    std::vector<std::optional<double>> hs(g.num_relations()), ds(g.num_relations());
    for (size_t r = 0; r < g.num_relations(); ++r) {
        const auto& nbrs = g.adj[r][v];
        RelationMetrics& m = prof.per_relation[r];
        m.n = static_cast<int>(nbrs.size());
        m.h = homophily(g, v, nbrs);
        if (auto local = local_label_distribution(g, nbrs)) m.d = tv_discrepancy(*local, global);
        hs[r] = m.h;
        ds[r] = m.d;
    }
    prof.h_agg = aggregate_relations(hs);
    prof.d_agg = aggregate_relations(ds);
    const auto& pn = proj.adj[v];
    prof.n_proj = static_cast<int>(pn.size());
    prof.h_proj = homophily(g, v, pn);
    if (auto local = local_label_distribution(g, pn)) prof.d_proj = tv_discrepancy(*local, global);
    return prof;
}

// Profiles for every labeled target-type node, ascending node id.
inline std::vector<NodeStructuralProfile> compute_profiles(const HeteroGraph& g,
                                                           const HomoProjection& proj,
                                                           int threads = 1) {
    std::vector<double> global = global_label_distribution(g);
    std::vector<NodeId> eligible;
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
        if (g.is_labeled(v)) eligible.push_back(v);
    }
    std::vector<NodeStructuralProfile> out(eligible.size());
    parallel_for(eligible.size(), threads, [&](size_t i) {
        out[i] = compute_profile(g, proj, global, eligible[i]);
    });
    return out;
}

inline IndicatorVector compute_indicators(const NodeStructuralProfile& prof) {
    IndicatorVector iv;
    iv.node = prof.node;
    auto set = [&](MetricKind m, AggKind a, const std::optional<double>& projv,
                   const std::optional<double>& aggv) {
        if (projv && aggv) iv.z[indicator_slot(m, a)] = (*projv < *aggv) ? 1 : 0;
    };
    set(MetricKind::H, AggKind::Min, prof.h_proj, prof.h_agg.min);
    set(MetricKind::H, AggKind::Max, prof.h_proj, prof.h_agg.max);
    set(MetricKind::H, AggKind::Avg, prof.h_proj, prof.h_agg.avg);
    set(MetricKind::D, AggKind::Min, prof.d_proj, prof.d_agg.min);
    set(MetricKind::D, AggKind::Max, prof.d_proj, prof.d_agg.max);
    set(MetricKind::D, AggKind::Avg, prof.d_proj, prof.d_agg.avg);
    return iv;
}

inline std::vector<IndicatorVector> compute_all_indicators(
    const std::vector<NodeStructuralProfile>& profiles) {
    std::vector<IndicatorVector> out;
    out.reserve(profiles.size());
    for (const auto& p : profiles) out.push_back(compute_indicators(p));
    return out;
}

} // namespace hga
