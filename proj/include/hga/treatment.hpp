#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "hga/graph.hpp"
#include "hga/metrics.hpp"

namespace hga {

// Per-seed predictions for the two compared models. Every evaluated node must
// appear exactly once per (model, seed) and the seed sets must be identical
// across models.
struct PredictionLog {
    std::vector<int> seeds; // sorted distinct
    std::unordered_map<NodeId, std::vector<int>> hetero; // node -> preds aligned to seeds
    std::unordered_map<NodeId, std::vector<int>> homo;

    int seed_count() const { return static_cast<int>(seeds.size()); }
};

// preds.tsv: model_id<TAB>seed<TAB>node_id<TAB>predicted_label
inline PredictionLog load_predictions(const std::string& path, const HeteroGraph& g) {
    std::unordered_map<std::string, NodeId> id_of;
    for (NodeId v = 0; v < g.num_nodes(); ++v) id_of.emplace(g.node_names[v], v);

    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::string line;
    long line_no = 0;
    // (model, node) -> seed -> pred, ordered for deterministic assembly
    std::map<int, std::map<std::pair<int, NodeId>, int>> raw; // model 0=hetero,1=homo
    std::set<int> seed_set;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::skip_line(line)) continue;
        auto where = path + ":" + std::to_string(line_no);
        auto fields = detail::split_tsv(line);
        if (fields.size() != 4) throw ParseError("malformed line (want 4 fields), " + where);
        int model;
        if (fields[0] == "hetero")
            model = 0;
        else if (fields[0] == "homo")
            model = 1;
        else
            throw ParseError("unknown model_id '" + fields[0] + "', " + where);
        int seed = static_cast<int>(detail::parse_int(fields[1], where));
        auto it = id_of.find(fields[2]);
        if (it == id_of.end()) throw ParseError("unknown node id '" + fields[2] + "', " + where);
        int pred = static_cast<int>(detail::parse_int(fields[3], where));
        if (pred < 0 || pred >= g.num_classes)
            throw ParseError("predicted label out of range, " + where);
        seed_set.insert(seed);
        auto key = std::make_pair(seed, it->second);
        if (!raw[model].emplace(key, pred).second)
            throw ParseError("duplicate record (model,seed,node), " + where);
    }
    PredictionLog log;
    log.seeds.assign(seed_set.begin(), seed_set.end());
    if (log.seeds.empty()) throw ParseError("no prediction records in " + path);
    for (int model = 0; model < 2; ++model) {
        auto& out = model == 0 ? log.hetero : log.homo;
        for (const auto& [key, pred] : raw[model]) {
            auto& vec = out[key.second];
            if (vec.empty()) vec.assign(log.seeds.size(), -1);
            auto si = std::lower_bound(log.seeds.begin(), log.seeds.end(), key.first);
            vec[si - log.seeds.begin()] = pred;
        }
    }
    // completeness: every evaluated node has all seeds under both models
    for (int model = 0; model < 2; ++model) {
        const auto& own = model == 0 ? log.hetero : log.homo;
        const auto& other = model == 0 ? log.homo : log.hetero;
        const char* name = model == 0 ? "hetero" : "homo";
        for (const auto& [node, preds] : own) {
            for (size_t s = 0; s < preds.size(); ++s) {
                if (preds[s] < 0)
                    throw ParseError("missing record: model " + std::string(name) + ", seed " +
                                     std::to_string(log.seeds[s]) + ", node " + g.node_names[node]);
            }
            if (!other.count(node))
                throw ParseError("node " + g.node_names[node] + " evaluated under " + name +
                                 " only");
        }
    }
    return log;
}

// Fraction of seeds whose prediction matches the true label.
inline double success_probability(const PredictionLog& log, const std::string& model_id,
                                  NodeId v, const HeteroGraph& g) {
    const auto& table = model_id == "hetero" ? log.hetero : log.homo;
    auto it = table.find(v);
    if (it == table.end())
        throw InvalidInput("node " + std::to_string(v) + " not evaluated under " + model_id);
    if (!g.is_labeled(v)) throw InvalidInput("success_probability: node is unlabeled");
    int correct = 0;
    for (int pred : it->second) {
        if (pred == g.labels[v]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(it->second.size());
}

// 1 iff the heterogeneous model is strictly more accurate; ties go to control.
inline int assign_treatment(double pi_hetero, double pi_homo) {
    return pi_hetero > pi_homo ? 1 : 0;
}

enum class OutcomeSpec { HeteroMajority, HomoMajority, HeteroAllSeeds };

inline OutcomeSpec parse_outcome_spec(const std::string& s) {
    if (s == "hetero_majority") return OutcomeSpec::HeteroMajority;
    if (s == "homo_majority") return OutcomeSpec::HomoMajority;
    if (s == "hetero_all_seeds") return OutcomeSpec::HeteroAllSeeds;
    throw InvalidInput("unknown outcome_spec: " + s);
}

inline const char* outcome_spec_name(OutcomeSpec s) {
    switch (s) {
        case OutcomeSpec::HeteroMajority: return "hetero_majority";
        case OutcomeSpec::HomoMajority: return "homo_majority";
        default: return "hetero_all_seeds";
    }
}

struct AuditRow {
    NodeId node = -1;
    double pi_hetero = 0, pi_homo = 0;
    int t = 0;
    int y = 0;
    std::vector<double> z; // standardized covariates
    IndicatorVector indicators;
};

struct AuditTable {
    std::vector<AuditRow> rows; // sorted by node id
    std::vector<std::string> covariate_names;
    std::string outcome_definition;
    size_t excluded_nodes = 0; // undefined under every relation, or not evaluated
};

inline std::vector<std::string> default_covariates(const HeteroGraph& g) {
    std::vector<std::string> names;
    for (const auto& r : g.relations) names.push_back("log_deg:" + r);
    names.push_back("log_deg_proj");
    names.push_back("h_avg");
    names.push_back("d_avg");
    return names;
}

namespace detail {

inline std::optional<double> covariate_value(const std::string& name, const HeteroGraph& g,
                                             const NodeStructuralProfile& p) {
    if (name.rfind("log_deg:", 0) == 0) {
        int r = g.relation_index(name.substr(8));
        return std::log1p(static_cast<double>(p.per_relation[r].n));
    }
    if (name == "log_deg_proj") return std::log1p(static_cast<double>(p.n_proj));
    if (name == "h_min") return p.h_agg.min;
    if (name == "h_max") return p.h_agg.max;
    if (name == "h_avg") return p.h_agg.avg;
    if (name == "d_min") return p.d_agg.min;
    if (name == "d_max") return p.d_agg.max;
    if (name == "d_avg") return p.d_agg.avg;
    if (name == "h_proj") return p.h_proj;
    if (name == "d_proj") return p.d_proj;
    throw InvalidInput("unknown covariate: " + name);
}

} // namespace detail

// One row per eligible node: test split when splits are given, otherwise all
// labeled target nodes; nodes with no defined relation metric are excluded and
// tallied. Covariates are standardized with population statistics of the
// eligible set.
inline AuditTable build_audit_table(const HeteroGraph& g,
                                    const std::vector<NodeStructuralProfile>& profiles,
                                    const std::vector<IndicatorVector>& indicators,
                                    const PredictionLog& log, OutcomeSpec outcome,
                                    std::vector<std::string> covariate_names = {},
                                    const std::unordered_map<NodeId, Split>* splits = nullptr) {
    if (covariate_names.empty()) covariate_names = default_covariates(g);
    AuditTable table;
    table.covariate_names = covariate_names;
    table.outcome_definition = outcome_spec_name(outcome);

    std::unordered_map<NodeId, size_t> profile_of;
    for (size_t i = 0; i < profiles.size(); ++i) profile_of.emplace(profiles[i].node, i);

    for (const auto& prof : profiles) {
        NodeId v = prof.node;
        if (splits) {
            auto it = splits->find(v);
            if (it == splits->end() || it->second != Split::Test) continue;
        }
        if (!log.hetero.count(v) || !log.homo.count(v)) {
            ++table.excluded_nodes;
            continue;
        }
        if (!prof.any_defined()) {
            ++table.excluded_nodes;
            continue;
        }
        AuditRow row;
        row.node = v;
        row.pi_hetero = success_probability(log, "hetero", v, g);
        row.pi_homo = success_probability(log, "homo", v, g);
        row.t = assign_treatment(row.pi_hetero, row.pi_homo);
        switch (outcome) {
            case OutcomeSpec::HeteroMajority: row.y = row.pi_hetero > 0.5 ? 1 : 0; break;
            case OutcomeSpec::HomoMajority: row.y = row.pi_homo > 0.5 ? 1 : 0; break;
            case OutcomeSpec::HeteroAllSeeds: row.y = row.pi_hetero == 1.0 ? 1 : 0; break;
        }
        row.z.reserve(covariate_names.size());
        for (const auto& name : covariate_names) {
            auto val = detail::covariate_value(name, g, prof);
            row.z.push_back(val.value_or(0.0));
        }
        row.indicators = indicators[profile_of.at(v)];
        table.rows.push_back(std::move(row));
    }
    if (table.rows.empty()) throw InvalidInput("build_audit_table: empty eligible set");
    std::sort(table.rows.begin(), table.rows.end(),
              [](const AuditRow& a, const AuditRow& b) { return a.node < b.node; });

    // standardize to zero mean / unit variance (population statistics)
    const size_t d = covariate_names.size();
    const double n = static_cast<double>(table.rows.size());
    for (size_t j = 0; j < d; ++j) {
        double m = 0;
        for (const auto& r : table.rows) m += r.z[j];
        m /= n;
        double var = 0;
        for (const auto& r : table.rows) var += (r.z[j] - m) * (r.z[j] - m);
        var /= n;
        double sd = std::sqrt(var);
        for (auto& r : table.rows) r.z[j] = sd > 1e-12 ? (r.z[j] - m) / sd : 0.0;
    }
    return table;
}

} // namespace hga
