#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hga/metrics.hpp"
#include "hga/patterns.hpp"
#include "hga/synth.hpp"
#include "hga/treatment.hpp"

namespace hga {

// round to 6 significant digits for stable serialization
inline double round_sig6(double x) {
    if (x == 0 || !std::isfinite(x)) return x;
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", x);
    return std::strtod(buf, nullptr);
}

inline std::string fmt6(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6f", x);
    return buf;
}

inline std::string fmt_opt(const std::optional<double>& x) {
    return x ? fmt6(*x) : std::string("-");
}

// profiles.tsv: per node one row per relation plus aggregate and projection
// rows; undefined printed as '-', reals with 6 decimals.
inline void write_profiles_tsv(const std::string& path, const HeteroGraph& g,
                               const std::vector<NodeStructuralProfile>& profiles) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write " + path);
    out << "node_id\trelation\tH_r\tD_r\tn_r\n";
    for (const auto& p : profiles) {
        const std::string& name = g.node_names[p.node];
        for (size_t r = 0; r < g.relations.size(); ++r) {
            const auto& m = p.per_relation[r];
            out << name << '\t' << g.relations[r] << '\t' << fmt_opt(m.h) << '\t' << fmt_opt(m.d)
                << '\t' << m.n << '\n';
        }
        out << name << "\t@min\t" << fmt_opt(p.h_agg.min) << '\t' << fmt_opt(p.d_agg.min)
            << "\t-\n";
        out << name << "\t@max\t" << fmt_opt(p.h_agg.max) << '\t' << fmt_opt(p.d_agg.max)
            << "\t-\n";
        out << name << "\t@avg\t" << fmt_opt(p.h_agg.avg) << '\t' << fmt_opt(p.d_agg.avg)
            << "\t-\n";
        out << name << "\t@proj\t" << fmt_opt(p.h_proj) << '\t' << fmt_opt(p.d_proj) << '\t'
            << p.n_proj << '\n';
    }
}

inline void write_indicators_tsv(const std::string& path, const HeteroGraph& g,
                                 const std::vector<IndicatorVector>& indicators) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write " + path);
    out << "node_id";
    for (MetricKind m : {MetricKind::H, MetricKind::D}) {
        for (AggKind a : {AggKind::Min, AggKind::Max, AggKind::Avg}) {
            out << "\tZ_" << metric_name(m) << '_' << agg_name(a);
        }
    }
    out << '\n';
    for (const auto& iv : indicators) {
        out << g.node_names[iv.node];
        for (int slot = 0; slot < 6; ++slot) {
            out << '\t';
            if (iv.z[slot])
                out << *iv.z[slot];
            else
                out << '-';
        }
        out << '\n';
    }
}

inline void write_preds_tsv(const std::string& path, const HeteroGraph& g,
                            const std::vector<PredRecord>& records) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write " + path);
    for (const auto& r : records) {
        out << r.model << '\t' << r.seed << '\t' << g.node_names[r.node] << '\t' << r.pred
            << '\n';
    }
}

namespace detail {

inline nlohmann::ordered_json opt_json(const std::optional<double>& x) {
    if (!x) return nullptr;
    return round_sig6(*x);
}

inline nlohmann::ordered_json estimate_json(const EffectEstimate& e) {
    nlohmann::ordered_json j;
    j["method"] = method_name(e.method);
    j["ate"] = round_sig6(e.ate);
    j["se"] = opt_json(e.se);
    j["ci95"] = {round_sig6(e.ci95.first), round_sig6(e.ci95.second)};
    j["z"] = opt_json(e.z);
    j["p"] = opt_json(e.p_value);
    j["rd"] = round_sig6(e.rd);
    j["rr"] = opt_json(e.rr);
    return j;
}

} // namespace detail

inline nlohmann::ordered_json effects_json(const std::vector<PatternReport>& reports,
                                           const AuditConfig& cfg) {
    nlohmann::ordered_json root;
    root["alpha"] = cfg.alpha;
    root["n_min"] = cfg.n_min;
    root["s_min"] = cfg.s_min;
    root["patterns"] = nlohmann::ordered_json::array();
    for (const auto& rep : reports) {
        nlohmann::ordered_json p;
        p["pattern"] = rep.pattern;
        p["n"] = rep.n;
        p["excluded"] = rep.excluded;
        p["n1"] = rep.cs.n1;
        p["n0"] = rep.cs.n0;
        p["p1"] = round_sig6(rep.cs.p1);
        p["p0"] = round_sig6(rep.cs.p0);
        p["adequacy"] = {{"pass", rep.adequacy.pass}, {"failures", rep.adequacy.failures}};
        p["q"] = detail::opt_json(rep.q);
        p["e_value"] = detail::opt_json(rep.e_val);
        p["adjustment_set"] = rep.adjustment_set;
        nlohmann::ordered_json methods = nlohmann::ordered_json::array();
        for (const auto& [m, e] : rep.estimates) methods.push_back(detail::estimate_json(e));
        p["estimates"] = methods;
        if (rep.counterfactual) {
            p["mean_uplift"] = round_sig6(rep.counterfactual->mean_uplift);
            p["median_uplift"] = round_sig6(rep.counterfactual->median_uplift);
            p["pn"] = detail::opt_json(rep.counterfactual->pn);
            p["ps"] = detail::opt_json(rep.counterfactual->ps);
        } else {
            p["mean_uplift"] = nullptr;
            p["median_uplift"] = nullptr;
            p["pn"] = nullptr;
            p["ps"] = nullptr;
        }
        if (rep.consistency) {
            p["consistency"] = {{"agree", rep.consistency->agree_count},
                                {"overlap", rep.consistency->ci_overlap},
                                {"consistent", rep.consistency->consistent}};
        } else {
            p["consistency"] = nullptr;
        }
        p["pass"] = rep.pass;
        p["notes"] = rep.stage_notes;
        root["patterns"].push_back(p);
    }
    return root;
}

inline void write_effects_json(const std::string& path, const std::vector<PatternReport>& reports,
                               const AuditConfig& cfg) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write " + path);
    out << effects_json(reports, cfg).dump(2) << '\n';
}

inline void write_effects_csv(const std::string& path,
                              const std::vector<PatternReport>& reports) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write " + path);
    out << "pattern,method,ate,se,ci_lo,ci_hi,z,p,q,rd,rr\n";
    auto cell = [](const std::optional<double>& x) { return x ? fmt6(round_sig6(*x)) : ""; };
    for (const auto& rep : reports) {
        for (const auto& [m, e] : rep.estimates) {
            out << rep.pattern << ',' << method_name(m) << ',' << fmt6(round_sig6(e.ate)) << ','
                << cell(e.se) << ',' << fmt6(round_sig6(e.ci95.first)) << ','
                << fmt6(round_sig6(e.ci95.second)) << ',' << cell(e.z) << ',' << cell(e.p_value)
                << ',' << (m == Method::DiffMeans ? cell(rep.q) : std::string()) << ','
                << fmt6(round_sig6(e.rd)) << ',' << cell(e.rr) << '\n';
        }
    }
}

// Markdown summary mirroring the factual / counterfactual / validation /
// occurrence table layout.
inline void write_markdown_report(const std::string& path,
                                  const std::vector<PatternReport>& reports,
                                  const OccurrenceReport* occurrence = nullptr) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write " + path);
    out << "# Pattern audit report\n\n";
    out << "## Factual evaluation\n\n";
    out << "| Pattern | n1 | n0 | ATE | SE | q | RR | PASS |\n";
    out << "|---|---|---|---|---|---|---|---|\n";
    for (const auto& rep : reports) {
        auto it = rep.estimates.find(Method::DiffMeans);
        out << "| " << rep.pattern << " | " << rep.cs.n1 << " | " << rep.cs.n0 << " | ";
        if (it != rep.estimates.end()) {
            out << fmt6(it->second.ate) << " | " << fmt_opt(it->second.se) << " | "
                << fmt_opt(rep.q) << " | " << fmt_opt(it->second.rr);
        } else {
            out << "- | - | - | -";
        }
        out << " | " << (rep.pass ? "yes" : "no") << " |\n";
    }
    out << "\n## Counterfactual evaluation\n\n";
    out << "| Pattern | Mean uplift | Median uplift | PN | PS |\n";
    out << "|---|---|---|---|---|\n";
    for (const auto& rep : reports) {
        out << "| " << rep.pattern << " | ";
        if (rep.counterfactual) {
            out << fmt6(rep.counterfactual->mean_uplift) << " | "
                << fmt6(rep.counterfactual->median_uplift) << " | "
                << fmt_opt(rep.counterfactual->pn) << " | " << fmt_opt(rep.counterfactual->ps);
        } else {
            out << "- | - | - | -";
        }
        out << " |\n";
    }
    out << "\n## Adjustment, consistency, sensitivity\n\n";
    out << "| Pattern | ATE (DR) | Consistency | E-value | Adjustment set |\n";
    out << "|---|---|---|---|---|\n";
    for (const auto& rep : reports) {
        out << "| " << rep.pattern << " | ";
        auto it = rep.estimates.find(Method::Dr);
        out << (it != rep.estimates.end() ? fmt6(it->second.ate) : std::string("-")) << " | ";
        if (rep.consistency)
            out << rep.consistency->agree_count << "/5";
        else
            out << '-';
        out << " | " << fmt_opt(rep.e_val) << " | ";
        if (rep.adjustment_set.empty())
            out << "(none)";
        for (size_t i = 0; i < rep.adjustment_set.size(); ++i) {
            if (i) out << ", ";
            out << rep.adjustment_set[i];
        }
        out << " |\n";
    }
    if (occurrence) {
        out << "\n## Pattern occurrence\n\n";
        out << "| Pattern | Occurrence (%) |\n|---|---|\n";
        for (size_t p = 0; p < occurrence->pattern_names.size(); ++p) {
            out << "| " << occurrence->pattern_names[p] << " | " << fmt6(occurrence->macro[p] * 100)
                << " |\n";
        }
        out << "| None | " << fmt6(occurrence->macro_none * 100) << " |\n";
    }
    out << '\n';
    for (const auto& rep : reports) {
        for (const auto& note : rep.stage_notes) {
            out << "- " << rep.pattern << ": " << note << '\n';
        }
    }
}

} // namespace hga
