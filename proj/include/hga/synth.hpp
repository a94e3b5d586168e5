#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "hga/estimators.hpp"
#include "hga/graph.hpp"
#include "hga/metrics.hpp"
#include "hga/patterns.hpp"
#include "hga/rng.hpp"
#include "hga/stats.hpp"

namespace hga {

struct RelationGenConfig {
    std::string name;
    double homophily = 0.5; // target same-label neighbor fraction
    int out_degree = 5;
};

struct GraphGenConfig {
    int n_nodes = 1000; // target-type nodes, all labeled
    std::string target_type = "node";
    std::vector<double> class_weights = {0.5, 0.5};
    std::vector<RelationGenConfig> relations = {{"r0", 0.8, 5}, {"r1", 0.3, 5}};
    std::map<std::string, int> extra_type_counts; // isolated unlabeled nodes
    uint64_t seed = 0;
};

// Labels drawn from the class weights; each relation wired with fixed
// out-degree so each endpoint choice is same-label with probability h_r.
// Fully reproducible from the seed.
inline HeteroGraph generate_graph(const GraphGenConfig& cfg) {
    if (cfg.n_nodes < 2) throw InvalidInput("generate_graph: need at least 2 nodes");
    double wsum = 0;
    for (double w : cfg.class_weights) {
        if (w < 0) throw InvalidInput("generate_graph: negative class weight");
        wsum += w;
    }
    if (cfg.class_weights.size() < 2 || std::abs(wsum - 1.0) > 1e-9)
        throw InvalidInput("generate_graph: class weights must sum to 1, C >= 2");
    for (const auto& r : cfg.relations) {
        if (r.homophily < 0 || r.homophily > 1)
            throw InvalidInput("generate_graph: homophily outside [0,1]");
        if (r.out_degree < 1 || r.out_degree >= cfg.n_nodes)
            throw InvalidInput("generate_graph: infeasible degree for node count");
    }

    HeteroGraph g;
    g.target_type = cfg.target_type;
    g.type_names.push_back(cfg.target_type);
    g.target_type_id = 0;
    g.num_classes = static_cast<int>(cfg.class_weights.size());

    CounterRng label_rng(cfg.seed, 0);
    std::vector<std::vector<NodeId>> pools(g.num_classes);
    for (int i = 0; i < cfg.n_nodes; ++i) {
        g.node_names.push_back("n" + std::to_string(i));
        g.node_type.push_back(0);
        double u = label_rng.uniform();
        int label = g.num_classes - 1;
        double acc = 0;
        for (int c = 0; c < g.num_classes; ++c) {
            acc += cfg.class_weights[c];
            if (u < acc) {
                label = c;
                break;
            }
        }
        g.labels.push_back(label);
        pools[label].push_back(i);
    }
    for (const auto& [type, count] : cfg.extra_type_counts) {
        int type_id = static_cast<int>(g.type_names.size());
        g.type_names.push_back(type);
        for (int i = 0; i < count; ++i) {
            g.node_names.push_back(type + std::to_string(i));
            g.node_type.push_back(type_id);
            g.labels.push_back(-1);
        }
    }

    std::vector<NodeId> others; // scratch: nodes with a different label
    for (size_t r = 0; r < cfg.relations.size(); ++r) {
        g.relations.push_back(cfg.relations[r].name);
        CounterRng rng(cfg.seed, 100 + r);
        for (NodeId v = 0; v < cfg.n_nodes; ++v) {
            int label = g.labels[v];
            const auto& same = pools[label];
            for (int k = 0; k < cfg.relations[r].out_degree; ++k) {
                bool want_same = rng.uniform() < cfg.relations[r].homophily;
                NodeId u;
                if (want_same) {
                    if (same.size() < 2)
                        throw InvalidInput("generate_graph: infeasible, class of node " +
                                           std::to_string(v) + " has a single member");
                    do {
                        u = same[rng.below(same.size())];
                    } while (u == v);
                } else {
                    if (others.capacity() == 0) others.reserve(cfg.n_nodes);
                    others.clear();
                    for (int c = 0; c < g.num_classes; ++c) {
                        if (c == label) continue;
                        others.insert(others.end(), pools[c].begin(), pools[c].end());
                    }
                    if (others.empty())
                        throw InvalidInput("generate_graph: infeasible, single populated class");
                    u = others[rng.below(others.size())];
                }
                g.edges.push_back({v, static_cast<int>(r), u});
            }
        }
    }
    std::vector<std::string> sorted = g.relations;
    std::sort(sorted.begin(), sorted.end());
    if (sorted != g.relations) {
        // remap relation indices to the sorted order kept by HeteroGraph
        std::map<std::string, int> new_index;
        for (size_t i = 0; i < sorted.size(); ++i) new_index[sorted[i]] = static_cast<int>(i);
        for (auto& e : g.edges) e.rel = new_index[cfg.relations[e.rel].name];
        g.relations = sorted;
    }
    g.finalize();
    return g;
}

struct CausalGenConfig {
    size_t n = 10000;
    double true_ate = 0.08;
    double gamma = 0.0;   // confounding strength: links z1 to both T and Y
    int dim = 2;
    uint64_t seed = 0;
    double base_logit = -0.5; // control-arm intercept
    double slope = 1.0;       // outcome coefficient on z1
    bool monotone = true;     // shared uniform coupling, Y(1) >= Y(0) row-wise
};

struct CausalSample {
    CausalData data;
    std::vector<int> y0, y1; // hidden potential outcomes, oracle scoring only
    double treated_intercept = 0;
};

namespace detail {

// E[expit(a + b Z)] for Z ~ N(0,1), by composite Simpson over [-10, 10].
inline double expit_normal_mean(double a, double b) {
    const int steps = 2000;
    const double lo = -10.0, hi = 10.0;
    const double h = (hi - lo) / steps;
    auto f = [&](double x) {
        return expit(a + b * x) * std::exp(-0.5 * x * x) / 2.5066282746310005024;
    };
    double s = f(lo) + f(hi);
    for (int i = 1; i < steps; ++i) s += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

} // namespace detail

// Rows with known ground truth: Z standard normal, T ~ Bern(expit(gamma z1)),
// potential outcomes Bernoulli with logit-linear means; the treated intercept
// is calibrated by bisection so E[Y(1) - Y(0)] matches true_ate.
inline CausalSample generate_causal_table(const CausalGenConfig& cfg) {
    if (cfg.n == 0 || cfg.dim < 1) throw InvalidInput("generate_causal_table: bad config");
    if (cfg.monotone && cfg.true_ate < 0)
        throw InvalidInput("generate_causal_table: monotone requires true_ate >= 0");
    double mean0 = detail::expit_normal_mean(cfg.base_logit, cfg.slope);
    double target = mean0 + cfg.true_ate;
    if (target <= 0.0 || target >= 1.0)
        throw InvalidInput("generate_causal_table: unattainable true_ate given mean levels");
    double lo = cfg.base_logit - 30, hi = cfg.base_logit + 30;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (detail::expit_normal_mean(mid, cfg.slope) < target)
            lo = mid;
        else
            hi = mid;
    }
    double a1 = 0.5 * (lo + hi);

    CausalSample out;
    out.treated_intercept = a1;
    out.data.t.resize(cfg.n);
    out.data.y.resize(cfg.n);
    out.data.z.resize(cfg.n);
    out.data.ids.resize(cfg.n);
    out.y0.resize(cfg.n);
    out.y1.resize(cfg.n);
    CounterRng z_rng(cfg.seed, 1), t_rng(cfg.seed, 2), u_rng(cfg.seed, 3), u1_rng(cfg.seed, 4);
    for (size_t i = 0; i < cfg.n; ++i) {
        auto& z = out.data.z[i];
        z.resize(cfg.dim);
        for (int j = 0; j < cfg.dim; ++j) z[j] = z_rng.normal();
        int t = t_rng.bernoulli(expit(cfg.gamma * z[0])) ? 1 : 0;
        double p0 = expit(cfg.base_logit + cfg.slope * z[0]);
        double p1 = expit(a1 + cfg.slope * z[0]);
        double u0 = u_rng.uniform();
        double u1 = cfg.monotone ? u0 : u1_rng.uniform();
        out.y0[i] = u0 < p0 ? 1 : 0;
        out.y1[i] = u1 < p1 ? 1 : 0;
        out.data.t[i] = t;
        out.data.y[i] = t ? out.y1[i] : out.y0[i];
        out.data.ids[i] = static_cast<NodeId>(i);
    }
    return out;
}

struct PredRecord {
    std::string model; // "hetero" or "homo"
    int seed;
    NodeId node;
    int pred;
};

struct PredictionGenConfig {
    int s = 5;             // seeds per model
    double planted_ate = 0.08; // accuracy lift for nodes matching P1
    double base_rate = 0.45;   // hetero majority-correct rate off-pattern
    double homo_correct = 0.5; // per-seed homogeneous accuracy
    uint64_t seed = 0;
};

// Per-seed prediction logs where heterogeneous-model correctness is planted as
// a function of the P1 pattern computed from the graph itself, so the full
// metrics -> audit pipeline can be scored against a known effect.
inline std::vector<PredRecord> generate_predictions(const HeteroGraph& g,
                                                    const PredictionGenConfig& cfg) {
    if (cfg.s < 1) throw InvalidInput("generate_predictions: need s >= 1");
    if (cfg.base_rate < 0 || cfg.base_rate + cfg.planted_ate > 1)
        throw InvalidInput("generate_predictions: rates outside [0,1]");
    HomoProjection proj = project_homogeneous(g);
    auto profiles = compute_profiles(g, proj);
    PatternSpec p1 = builtin_patterns()[0];

    std::vector<PredRecord> records;
    CounterRng y_rng(cfg.seed, 10), homo_rng(cfg.seed, 11);
    for (const auto& prof : profiles) {
        NodeId v = prof.node;
        IndicatorVector iv = compute_indicators(prof);
        bool match = evaluate_pattern(p1, iv) == PatternEval::Match;
        double p = cfg.base_rate + (match ? cfg.planted_ate : 0.0);
        bool correct = y_rng.bernoulli(p);
        int y = g.labels[v];
        int wrong = (y + 1) % g.num_classes;
        for (int t = 0; t < cfg.s; ++t) {
            records.push_back({"hetero", t, v, correct ? y : wrong});
            bool homo_ok = homo_rng.bernoulli(cfg.homo_correct);
            records.push_back({"homo", t, v, homo_ok ? y : wrong});
        }
    }
    return records;
}

} // namespace hga
