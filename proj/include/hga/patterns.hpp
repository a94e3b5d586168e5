#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hga/estimators.hpp"
#include "hga/metrics.hpp"
#include "hga/treatment.hpp"

namespace hga {

struct PatternClause {
    MetricKind metric;
    AggKind agg;
    int required; // 0 or 1
};

// Conjunction of indicator requirements.
struct PatternSpec {
    std::string name;
    std::vector<PatternClause> clauses;

    void validate() const {
        if (clauses.empty()) throw InvalidInput("pattern '" + name + "' has no clauses");
        std::set<int> seen;
        for (const auto& c : clauses) {
            if (c.required != 0 && c.required != 1)
                throw InvalidInput("pattern '" + name + "': clause value must be 0 or 1");
            if (!seen.insert(indicator_slot(c.metric, c.agg)).second)
                throw InvalidInput("pattern '" + name + "': duplicate (metric, agg) clause");
        }
    }
};

inline std::vector<PatternSpec> builtin_patterns() {
    return {
        {"P1", {{MetricKind::H, AggKind::Avg, 1}, {MetricKind::D, AggKind::Min, 1}}},
        {"P2", {{MetricKind::D, AggKind::Min, 1}}},
        {"P3", {{MetricKind::H, AggKind::Avg, 1}}},
    };
}

enum class PatternEval { Match, NoMatch, Undefined };

inline PatternEval evaluate_pattern(const PatternSpec& spec, const IndicatorVector& iv) {
    for (const auto& c : spec.clauses) {
        const auto& z = iv.z[indicator_slot(c.metric, c.agg)];
        if (!z) return PatternEval::Undefined;
    }
    for (const auto& c : spec.clauses) {
        if (*iv.z[indicator_slot(c.metric, c.agg)] != c.required) return PatternEval::NoMatch;
    }
    return PatternEval::Match;
}

struct OccurrenceReport {
    std::vector<std::string> pattern_names;
    // per dataset: fraction per pattern among defined nodes
    std::vector<std::vector<double>> per_dataset;
    std::vector<double> none_fraction;      // per dataset
    std::vector<size_t> n_evaluated;        // defined nodes per dataset
    std::vector<size_t> n_excluded;         // undefined nodes per dataset
    std::vector<double> macro;              // unweighted mean over datasets
    double macro_none = 0;
};

// Per-dataset occurrence fractions among nodes where every referenced
// indicator is defined, plus the unweighted macro-average.
inline OccurrenceReport occurrence_stats(const std::vector<std::vector<IndicatorVector>>& datasets,
                                         const std::vector<PatternSpec>& specs) {
    OccurrenceReport rep;
    for (const auto& s : specs) rep.pattern_names.push_back(s.name);
    rep.macro.assign(specs.size(), 0.0);
    for (const auto& ds : datasets) {
        std::vector<long> counts(specs.size(), 0);
        long defined = 0, excluded = 0, none = 0;
        for (const auto& iv : ds) {
            bool any_undefined = false;
            std::vector<bool> match(specs.size(), false);
            for (size_t p = 0; p < specs.size(); ++p) {
                PatternEval ev = evaluate_pattern(specs[p], iv);
                if (ev == PatternEval::Undefined) {
                    any_undefined = true;
                    break;
                }
                match[p] = ev == PatternEval::Match;
            }
            if (any_undefined) {
                ++excluded;
                continue;
            }
            ++defined;
            bool any = false;
            for (size_t p = 0; p < specs.size(); ++p) {
                if (match[p]) {
                    ++counts[p];
                    any = true;
                }
            }
            if (!any) ++none;
        }
        if (defined == 0) throw InvalidInput("occurrence_stats: all nodes undefined in a dataset");
        std::vector<double> fracs(specs.size());
        for (size_t p = 0; p < specs.size(); ++p)
            fracs[p] = static_cast<double>(counts[p]) / static_cast<double>(defined);
        rep.per_dataset.push_back(fracs);
        rep.none_fraction.push_back(static_cast<double>(none) / static_cast<double>(defined));
        rep.n_evaluated.push_back(static_cast<size_t>(defined));
        rep.n_excluded.push_back(static_cast<size_t>(excluded));
    }
    const double k = static_cast<double>(datasets.size());
    for (size_t p = 0; p < specs.size(); ++p) {
        for (const auto& fracs : rep.per_dataset) rep.macro[p] += fracs[p];
        rep.macro[p] /= k;
    }
    for (double nf : rep.none_fraction) rep.macro_none += nf;
    rep.macro_none /= k;
    return rep;
}

// Knobs for the per-pattern causal pipeline.
struct AuditConfig {
    double alpha = 0.05;
    long n_min = 30;
    long s_min = 5;
    double clip = 0.01;
    int bootstrap_n = 200;
    uint64_t base_seed = 0;
    double rr_threshold = 1.1; // practical-significance floor for PASS
    // adjustment set: explicit covariate names, or balance search when empty
    std::vector<std::string> adjustment_covariates;
    bool adjustment_search = true;
    size_t search_max_size = 3;
    double balance_threshold = 0.1;
};

struct PatternReport {
    std::string pattern;
    size_t n = 0;        // rows with a defined pattern evaluation
    size_t excluded = 0; // undefined rows
    ContingencySummary cs;
    AdequacyVerdict adequacy;
    std::map<Method, EffectEstimate> estimates;
    std::optional<double> q;
    std::optional<CounterfactualReport> counterfactual;
    std::optional<ConsistencyVerdict> consistency;
    std::optional<double> e_val;
    std::optional<double> tmle_epsilon;
    std::vector<std::string> adjustment_set;
    bool pass = false;
    std::vector<std::string> stage_notes;
};

namespace detail {

inline CausalData pattern_causal_data(const AuditTable& table, const PatternSpec& spec,
                                      size_t* excluded) {
    CausalData d;
    *excluded = 0;
    for (const auto& row : table.rows) {
        PatternEval ev = evaluate_pattern(spec, row.indicators);
        if (ev == PatternEval::Undefined) {
            ++*excluded;
            continue;
        }
        d.t.push_back(ev == PatternEval::Match ? 1 : 0);
        d.y.push_back(row.y);
        d.z.push_back(row.z);
        d.ids.push_back(row.node);
    }
    return d;
}

} // namespace detail

// Designates the pattern as the treatment over the configured outcome and runs
// the full battery: adequacy gate, difference in means, nuisance fits on the
// adjustment set, PSM/IPW/DR/TMLE, counterfactual summary, consistency, and
// E-value. Stage failures are recorded in the report instead of aborting.
// The BH q-value is joined across patterns by audit_patterns.
inline PatternReport run_pattern_audit(const AuditTable& table, const PatternSpec& spec,
                                       const AuditConfig& cfg) {
    spec.validate();
    PatternReport rep;
    rep.pattern = spec.name;
    CausalData d = detail::pattern_causal_data(table, spec, &rep.excluded);
    rep.n = d.n();
    if (d.n() == 0) {
        rep.stage_notes.push_back("no rows with defined pattern evaluation");
        return rep;
    }
    rep.cs = ContingencySummary::from(d);
    rep.adequacy = adequacy_check(rep.cs, cfg.n_min, cfg.s_min);
    if (!rep.adequacy.pass) {
        rep.stage_notes.push_back("adequacy failed: downstream stages skipped");
        return rep;
    }

    EffectEstimate dim = diff_in_means(rep.cs);
    rep.estimates[Method::DiffMeans] = dim;
    if (dim.rr) rep.e_val = e_value(*dim.rr);

    // adjustment set
    std::vector<size_t> cols;
    try {
        if (!cfg.adjustment_covariates.empty()) {
            for (const auto& name : cfg.adjustment_covariates) {
                auto it = std::find(table.covariate_names.begin(), table.covariate_names.end(),
                                    name);
                if (it == table.covariate_names.end())
                    throw InvalidInput("unknown covariate: " + name);
                cols.push_back(static_cast<size_t>(it - table.covariate_names.begin()));
            }
        } else if (cfg.adjustment_search) {
            std::vector<size_t> candidates(table.covariate_names.size());
            for (size_t i = 0; i < candidates.size(); ++i) candidates[i] = i;
            auto found = minimal_adjustment_search(d, candidates, cfg.search_max_size,
                                                   cfg.balance_threshold, cfg.clip);
            cols = found.subset;
            if (!found.balanced)
                rep.stage_notes.push_back("adjustment search: no balanced subset, using full set");
        } else {
            cols.resize(table.covariate_names.size());
            for (size_t i = 0; i < cols.size(); ++i) cols[i] = i;
        }
        for (size_t c : cols) rep.adjustment_set.push_back(table.covariate_names[c]);

        CausalData adj = cols.empty() ? d : detail::project_columns(d, cols);
        if (cols.empty()) {
            // randomize-like: intercept-only nuisance
            for (auto& z : adj.z) z.clear();
        }
        NuisanceModels nm = fit_nuisance(adj, cfg.clip);
        if (nm.propensity.ridge_fallback)
            rep.stage_notes.push_back("propensity: separation, ridge fallback");

        rep.estimates[Method::Psm] = psm_ate(adj, nm.e, cfg.bootstrap_n, cfg.base_seed);
        rep.estimates[Method::Ipw] = ipw_ate(adj, nm.e, cfg.bootstrap_n, cfg.base_seed + 1);
        rep.estimates[Method::Dr] = dr_ate(adj, nm);
        TmleResult tm = tmle_ate(adj, nm);
        rep.estimates[Method::Tmle] = tm.estimate;
        rep.tmle_epsilon = tm.epsilon;
        if (tm.fluctuation_failed)
            rep.stage_notes.push_back("tmle: fluctuation diverged, epsilon reset to 0");

        rep.counterfactual = counterfactual_report(adj, nm);

        std::vector<EffectEstimate> five;
        for (const auto& [m, e] : rep.estimates) five.push_back(e);
        rep.consistency = consistency_check(five);
    } catch (const std::exception& ex) {
        rep.stage_notes.push_back(std::string("adjusted stage failed: ") + ex.what());
    }
    return rep;
}

// Runs every pattern, then applies the shared BH correction over the collected
// p-values and finalizes the PASS flag: adequacy, q <= alpha, RR >= threshold.
inline std::vector<PatternReport> audit_patterns(const AuditTable& table,
                                                 const std::vector<PatternSpec>& specs,
                                                 const AuditConfig& cfg) {
    std::vector<PatternReport> reports;
    reports.reserve(specs.size());
    for (const auto& spec : specs) reports.push_back(run_pattern_audit(table, spec, cfg));

    std::vector<double> ps;
    std::vector<size_t> owner;
    for (size_t i = 0; i < reports.size(); ++i) {
        auto it = reports[i].estimates.find(Method::DiffMeans);
        if (it != reports[i].estimates.end() && it->second.p_value) {
            ps.push_back(*it->second.p_value);
            owner.push_back(i);
        }
    }
    if (!ps.empty()) {
        FdrResult fdr = bh_fdr(ps, cfg.alpha);
        for (size_t k = 0; k < owner.size(); ++k) reports[owner[k]].q = fdr.q_values[k];
    }
    for (auto& rep : reports) {
        const auto it = rep.estimates.find(Method::DiffMeans);
        bool rr_ok = it != rep.estimates.end() && it->second.rr &&
                     *it->second.rr >= cfg.rr_threshold;
        rep.pass = rep.adequacy.pass && rep.q && *rep.q <= cfg.alpha && rr_ok;
    }
    return reports;
}

} // namespace hga
