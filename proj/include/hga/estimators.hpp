#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hga/graph.hpp"
#include "hga/rng.hpp"
#include "hga/stats.hpp"
#include "hga/treatment.hpp"

namespace hga {

constexpr double kZ95 = 1.959963984540054; // two-sided 95% normal quantile

enum class Method { DiffMeans, Psm, Ipw, Dr, Tmle };

inline const char* method_name(Method m) {
    switch (m) {
        case Method::DiffMeans: return "diff_means";
        case Method::Psm: return "psm";
        case Method::Ipw: return "ipw";
        case Method::Dr: return "dr";
        default: return "tmle";
    }
}

// Unit-level view the estimators operate on: binary treatment, binary outcome,
// covariate rows, and stable ids for tie-breaking.
struct CausalData {
    std::vector<int> t;
    std::vector<int> y;
    std::vector<std::vector<double>> z;
    std::vector<NodeId> ids;

    size_t n() const { return t.size(); }
};

inline CausalData causal_view(const AuditTable& table) {
    CausalData d;
    d.t.reserve(table.rows.size());
    for (const auto& r : table.rows) {
        d.t.push_back(r.t);
        d.y.push_back(r.y);
        d.z.push_back(r.z);
        d.ids.push_back(r.node);
    }
    return d;
}

struct ContingencySummary {
    long n1 = 0, n0 = 0;
    double p1 = 0, p0 = 0;

    static ContingencySummary from(const CausalData& d) {
        ContingencySummary cs;
        long e1 = 0, e0 = 0;
        for (size_t i = 0; i < d.n(); ++i) {
            if (d.t[i]) {
                ++cs.n1;
                e1 += d.y[i];
            } else {
                ++cs.n0;
                e0 += d.y[i];
            }
        }
        if (cs.n1 > 0) cs.p1 = static_cast<double>(e1) / cs.n1;
        if (cs.n0 > 0) cs.p0 = static_cast<double>(e0) / cs.n0;
        return cs;
    }
};

struct AdequacyVerdict {
    bool pass = false;
    std::vector<std::string> failures;
    long n_min = 0, s_min = 0;
};

inline AdequacyVerdict adequacy_check(const ContingencySummary& cs, long n_min = 30,
                                      long s_min = 5) {
    AdequacyVerdict v;
    v.n_min = n_min;
    v.s_min = s_min;
    auto fail = [&](const std::string& what, double got, long need) {
        std::ostringstream os;
        os << what << ' ' << got << " < " << need;
        v.failures.push_back(os.str());
    };
    if (cs.n1 < n_min) fail("treated group", static_cast<double>(cs.n1), n_min);
    if (cs.n0 < n_min) fail("control group", static_cast<double>(cs.n0), n_min);
    double e1 = cs.n1 * cs.p1, ne1 = cs.n1 * (1 - cs.p1);
    double e0 = cs.n0 * cs.p0, ne0 = cs.n0 * (1 - cs.p0);
    if (e1 < s_min) fail("treated events", e1, s_min);
    if (ne1 < s_min) fail("treated non-events", ne1, s_min);
    if (e0 < s_min) fail("control events", e0, s_min);
    if (ne0 < s_min) fail("control non-events", ne0, s_min);
    v.pass = v.failures.empty();
    return v;
}

struct EffectEstimate {
    Method method = Method::DiffMeans;
    double ate = 0;
    std::optional<double> se;
    std::pair<double, double> ci95{0, 0};
    std::optional<double> z;
    std::optional<double> p_value;
    double rd = 0;
    std::optional<double> rr;
};

inline void fill_ci(EffectEstimate& e) {
    if (e.se) e.ci95 = {e.ate - kZ95 * *e.se, e.ate + kZ95 * *e.se};
}

inline EffectEstimate diff_in_means(const ContingencySummary& cs) {
    if (cs.n1 == 0 || cs.n0 == 0) throw InvalidInput("diff_in_means: empty arm");
    EffectEstimate e;
    e.method = Method::DiffMeans;
    e.ate = cs.p1 - cs.p0;
    e.rd = e.ate;
    double var = cs.p1 * (1 - cs.p1) / cs.n1 + cs.p0 * (1 - cs.p0) / cs.n0;
    e.se = std::sqrt(var);
    if (*e.se > 0) {
        e.z = e.ate / *e.se;
        e.p_value = two_sided_p(*e.z);
    }
    if (cs.p0 > 0) e.rr = cs.p1 / cs.p0;
    fill_ci(e);
    return e;
}

struct FdrResult {
    size_t m = 0;
    double alpha = 0;
    std::vector<double> q_values; // aligned to input order
    size_t k_star = 0;
};

// Benjamini-Hochberg: q_(m)=p_(m), q_(i)=min{(m/i)p_(i), q_(i+1)}, capped at 1.
inline FdrResult bh_fdr(const std::vector<double>& p_values, double alpha = 0.05) {
    for (double p : p_values) {
        if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("bh_fdr: p-value outside [0,1]");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("bh_fdr: alpha outside (0,1)");
    FdrResult res;
    res.m = p_values.size();
    res.alpha = alpha;
    res.q_values.assign(res.m, 0.0);
    if (res.m == 0) return res;
    std::vector<size_t> order(res.m);
    for (size_t i = 0; i < res.m; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return p_values[a] < p_values[b]; });
    const double m = static_cast<double>(res.m);
    std::vector<double> q_sorted(res.m);
    q_sorted[res.m - 1] = std::min(1.0, p_values[order[res.m - 1]]);
    for (size_t i = res.m - 1; i-- > 0;) {
        double scaled = m / static_cast<double>(i + 1) * p_values[order[i]];
        q_sorted[i] = std::min(std::min(scaled, q_sorted[i + 1]), 1.0);
    }
    for (size_t i = 0; i < res.m; ++i) res.q_values[order[i]] = q_sorted[i];
    for (size_t i = res.m; i-- > 0;) {
        if (p_values[order[i]] <= static_cast<double>(i + 1) / m * alpha) {
            res.k_star = i + 1;
            break;
        }
    }
    return res;
}

// Fitted nuisance models plus cached per-row predictions for one dataset.
struct NuisanceModels {
    LogisticFit propensity;
    LogisticFit mu0, mu1;
    double clip = 0.01;
    std::vector<double> e;  // clipped propensity per row
    std::vector<double> m0; // mu_0(Z) per row
    std::vector<double> m1; // mu_1(Z) per row
};

inline LogisticFit fit_propensity(const CausalData& d, double ridge = 0.0) {
    long n1 = 0;
    for (int t : d.t) n1 += t;
    if (n1 == 0 || n1 == static_cast<long>(d.n()))
        throw InvalidInput("fit_propensity: a treatment arm is empty");
    return fit_logistic(d.z, d.t, ridge);
}

inline NuisanceModels fit_nuisance(const CausalData& d, double clip = 0.01) {
    NuisanceModels nm;
    nm.clip = clip;
    nm.propensity = fit_propensity(d);
    std::vector<std::vector<double>> z1, z0;
    std::vector<int> y1, y0;
    for (size_t i = 0; i < d.n(); ++i) {
        if (d.t[i]) {
            z1.push_back(d.z[i]);
            y1.push_back(d.y[i]);
        } else {
            z0.push_back(d.z[i]);
            y0.push_back(d.y[i]);
        }
    }
    nm.mu1 = fit_logistic(z1, y1);
    nm.mu0 = fit_logistic(z0, y0);
    nm.e.resize(d.n());
    nm.m0.resize(d.n());
    nm.m1.resize(d.n());
    for (size_t i = 0; i < d.n(); ++i) {
        nm.e[i] = std::clamp(predict_prob(nm.propensity, d.z[i]), clip, 1.0 - clip);
        nm.m0[i] = predict_prob(nm.mu0, d.z[i]);
        nm.m1[i] = predict_prob(nm.mu1, d.z[i]);
    }
    return nm;
}

namespace detail {

// Controls indexed for nearest-propensity lookup; equal distances resolve to
// the smallest node id.
struct MatchIndex {
    std::vector<double> e_sorted;               // distinct propensity values, ascending
    std::vector<std::pair<NodeId, int>> best;   // per value: (min id, its outcome)

    static MatchIndex build(const std::vector<double>& e, const CausalData& d,
                            const std::vector<size_t>& control_rows) {
        std::vector<std::pair<double, size_t>> items;
        items.reserve(control_rows.size());
        for (size_t i : control_rows) items.emplace_back(e[i], i);
        std::sort(items.begin(), items.end(), [&](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first < b.first;
            return d.ids[a.second] < d.ids[b.second];
        });
        MatchIndex idx;
        for (const auto& [ev, row] : items) {
            if (idx.e_sorted.empty() || idx.e_sorted.back() != ev) {
                idx.e_sorted.push_back(ev);
                idx.best.emplace_back(d.ids[row], d.y[row]);
            }
        }
        return idx;
    }

    // outcome of the matched control for a treated unit with propensity ev
    int match_outcome(double ev) const {
        auto it = std::lower_bound(e_sorted.begin(), e_sorted.end(), ev);
        size_t hi = it - e_sorted.begin();
        if (hi == e_sorted.size()) return best[hi - 1].second;
        if (hi == 0) return best[0].second;
        double d_hi = e_sorted[hi] - ev;
        double d_lo = ev - e_sorted[hi - 1];
        if (d_lo < d_hi) return best[hi - 1].second;
        if (d_hi < d_lo) return best[hi].second;
        // tie: smaller node id wins
        return best[hi - 1].first < best[hi].first ? best[hi - 1].second : best[hi].second;
    }
};

inline double psm_point(const CausalData& d, const std::vector<double>& e,
                        const std::vector<size_t>& rows) {
    std::vector<size_t> treated, control;
    for (size_t i : rows) (d.t[i] ? treated : control).push_back(i);
    if (treated.empty() || control.empty()) return std::numeric_limits<double>::quiet_NaN();
    MatchIndex idx = MatchIndex::build(e, d, control);
    double sum = 0;
    for (size_t i : treated) sum += d.y[i] - idx.match_outcome(e[i]);
    return sum / static_cast<double>(treated.size());
}

inline std::vector<size_t> all_rows(size_t n) {
    std::vector<size_t> rows(n);
    for (size_t i = 0; i < n; ++i) rows[i] = i;
    return rows;
}

// Resample indices for one bootstrap replicate; randomness keyed by
// (base_seed, resample_index) so results are scheduling-independent.
inline std::vector<size_t> bootstrap_rows(size_t n, uint64_t seed, uint64_t resample) {
    CounterRng rng(seed, resample + 1);
    std::vector<size_t> rows(n);
    for (size_t i = 0; i < n; ++i) rows[i] = static_cast<size_t>(rng.below(n));
    return rows;
}

template <typename PointFn>
std::optional<double> bootstrap_se(size_t n, int n_boot, uint64_t seed, PointFn&& point) {
    std::vector<double> reps;
    reps.reserve(n_boot);
    for (int b = 0; b < n_boot; ++b) {
        double v = point(bootstrap_rows(n, seed, static_cast<uint64_t>(b)));
        if (std::isfinite(v)) reps.push_back(v);
    }
    if (reps.size() < 2) return std::nullopt;
    return sample_sd(reps);
}

} // namespace detail

// Nearest-propensity matching with replacement, bootstrap SE.
inline EffectEstimate psm_ate(const CausalData& d, const std::vector<double>& e,
                              int n_boot = 200, uint64_t seed = 0) {
    EffectEstimate est;
    est.method = Method::Psm;
    double point = detail::psm_point(d, e, detail::all_rows(d.n()));
    if (!std::isfinite(point)) throw InvalidInput("psm_ate: no control units");
    est.ate = point;
    est.rd = point;
    est.se = detail::bootstrap_se(d.n(), n_boot, seed,
                                  [&](const std::vector<size_t>& rows) {
                                      return detail::psm_point(d, e, rows);
                                  });
    fill_ci(est);
    return est;
}

namespace detail {

inline double hajek_point(const CausalData& d, const std::vector<double>& e,
                          const std::vector<size_t>& rows) {
    double w1 = 0, w1y = 0, w0 = 0, w0y = 0;
    for (size_t i : rows) {
        if (d.t[i]) {
            double w = 1.0 / e[i];
            w1 += w;
            w1y += w * d.y[i];
        } else {
            double w = 1.0 / (1.0 - e[i]);
            w0 += w;
            w0y += w * d.y[i];
        }
    }
    if (w1 == 0 || w0 == 0) return std::numeric_limits<double>::quiet_NaN();
    return w1y / w1 - w0y / w0;
}

} // namespace detail

// Hajek (self-normalized) inverse-probability-weighted estimator.
inline EffectEstimate ipw_ate(const CausalData& d, const std::vector<double>& e,
                              int n_boot = 200, uint64_t seed = 0) {
    EffectEstimate est;
    est.method = Method::Ipw;
    double point = detail::hajek_point(d, e, detail::all_rows(d.n()));
    if (!std::isfinite(point)) throw InvalidInput("ipw_ate: all weights zero in an arm");
    est.ate = point;
    est.rd = point;
    est.se = detail::bootstrap_se(d.n(), n_boot, seed,
                                  [&](const std::vector<size_t>& rows) {
                                      return detail::hajek_point(d, e, rows);
                                  });
    fill_ci(est);
    return est;
}

// AIPW: influence-term average, SE from the sample sd of the terms.
inline EffectEstimate dr_ate(const CausalData& d, const NuisanceModels& nm) {
    if (nm.e.size() != d.n()) throw InvalidInput("dr_ate: nuisance models missing");
    EffectEstimate est;
    est.method = Method::Dr;
    std::vector<double> phi(d.n());
    for (size_t i = 0; i < d.n(); ++i) {
        double t = d.t[i], y = d.y[i];
        phi[i] = t * (y - nm.m1[i]) / nm.e[i] - (1 - t) * (y - nm.m0[i]) / (1 - nm.e[i]) +
                 nm.m1[i] - nm.m0[i];
    }
    est.ate = mean(phi);
    est.rd = est.ate;
    est.se = sample_sd(phi) / std::sqrt(static_cast<double>(d.n()));
    if (*est.se > 0) {
        est.z = est.ate / *est.se;
        est.p_value = two_sided_p(*est.z);
    }
    fill_ci(est);
    return est;
}

struct TmleResult {
    EffectEstimate estimate;
    double epsilon = 0;
    bool fluctuation_failed = false; // reported; estimate falls back to epsilon = 0
};

// One-step logistic fluctuation on the clever covariate
// h_i = T_i/e_i - (1-T_i)/(1-e_i), then plug-in average of the updated models.
inline TmleResult tmle_ate(const CausalData& d, const NuisanceModels& nm) {
    if (nm.e.size() != d.n()) throw InvalidInput("tmle_ate: nuisance models missing");
    const size_t n = d.n();
    std::vector<double> h(n), offset(n);
    for (size_t i = 0; i < n; ++i) {
        h[i] = d.t[i] ? 1.0 / nm.e[i] : -1.0 / (1.0 - nm.e[i]);
        offset[i] = logit(d.t[i] ? nm.m1[i] : nm.m0[i]);
    }
    // Newton on the scalar fluctuation parameter
    double eps = 0;
    bool failed = false;
    for (int it = 0; it < 100; ++it) {
        double grad = 0, hess = 0;
        for (size_t i = 0; i < n; ++i) {
            double mu = expit(offset[i] + eps * h[i]);
            grad += h[i] * (d.y[i] - mu);
            hess += h[i] * h[i] * mu * (1 - mu);
        }
        if (hess < 1e-12) break;
        double step = grad / hess;
        eps += step;
        if (!std::isfinite(eps) || std::abs(eps) > 10) {
            failed = true;
            break;
        }
        if (std::abs(step) < 1e-12) break;
    }
    if (failed) eps = 0;

    TmleResult res;
    res.epsilon = eps;
    res.fluctuation_failed = failed;
    std::vector<double> eic(n);
    double ate = 0;
    std::vector<double> mu1s(n), mu0s(n);
    for (size_t i = 0; i < n; ++i) {
        mu1s[i] = expit(logit(nm.m1[i]) + eps / nm.e[i]);
        mu0s[i] = expit(logit(nm.m0[i]) - eps / (1.0 - nm.e[i]));
        ate += mu1s[i] - mu0s[i];
    }
    ate /= static_cast<double>(n);
    for (size_t i = 0; i < n; ++i) {
        double mu_obs = d.t[i] ? mu1s[i] : mu0s[i];
        eic[i] = h[i] * (d.y[i] - mu_obs) + (mu1s[i] - mu0s[i]) - ate;
    }
    EffectEstimate& est = res.estimate;
    est.method = Method::Tmle;
    est.ate = ate;
    est.rd = ate;
    est.se = sample_sd(eic) / std::sqrt(static_cast<double>(n));
    if (*est.se > 0) {
        est.z = est.ate / *est.se;
        est.p_value = two_sided_p(*est.z);
    }
    fill_ci(est);
    return res;
}

struct CounterfactualReport {
    double mean_uplift = 0;
    double median_uplift = 0;
    std::optional<double> pn; // undefined when p1 = 0
    std::optional<double> ps; // undefined when p0 = 1
};

// Node-level uplift from the outcome models; PN/PS via point identification
// under monotonicity.
inline CounterfactualReport counterfactual_report(const CausalData& d, const NuisanceModels& nm) {
    if (nm.m1.size() != d.n()) throw InvalidInput("counterfactual_report: nuisance missing");
    std::vector<double> uplift(d.n());
    for (size_t i = 0; i < d.n(); ++i) uplift[i] = nm.m1[i] - nm.m0[i];
    CounterfactualReport rep;
    rep.mean_uplift = mean(uplift);
    rep.median_uplift = lower_median(uplift);
    ContingencySummary cs = ContingencySummary::from(d);
    if (cs.p1 > 0) rep.pn = std::max(0.0, (cs.p1 - cs.p0) / cs.p1);
    if (cs.p0 < 1) rep.ps = std::max(0.0, (cs.p1 - cs.p0) / (1.0 - cs.p0));
    return rep;
}

// E-value: rr + sqrt(rr(rr-1)) for rr >= 1, applied to 1/rr below 1.
inline double e_value(double rr) {
    if (rr <= 0) throw InvalidInput("e_value: rr must be positive");
    double r = rr >= 1.0 ? rr : 1.0 / rr;
    return r + std::sqrt(r * (r - 1.0));
}

struct ConsistencyVerdict {
    int agree_count = 0;
    std::map<Method, int> directions; // -1, 0, +1
    bool ci_overlap = false;
    bool consistent = false;
};

inline ConsistencyVerdict consistency_check(const std::vector<EffectEstimate>& estimates) {
    if (estimates.size() != 5) throw InvalidInput("consistency_check: need exactly 5 estimates");
    const EffectEstimate* ref = nullptr;
    for (const auto& e : estimates) {
        if (e.method == Method::DiffMeans) ref = &e;
    }
    if (!ref) throw InvalidInput("consistency_check: diff_means estimate missing");
    auto sign = [](double x) { return x > 0 ? 1 : (x < 0 ? -1 : 0); };
    ConsistencyVerdict v;
    int ref_sign = sign(ref->ate);
    for (const auto& e : estimates) {
        int s = sign(e.ate);
        v.directions[e.method] = s;
        if (s == ref_sign) ++v.agree_count;
    }
    v.ci_overlap = true;
    for (size_t i = 0; i < estimates.size(); ++i) {
        for (size_t j = i + 1; j < estimates.size(); ++j) {
            if (!estimates[i].se || !estimates[j].se) continue;
            const auto& a = estimates[i].ci95;
            const auto& b = estimates[j].ci95;
            if (a.first > b.second || b.first > a.second) v.ci_overlap = false;
        }
    }
    v.consistent = v.agree_count == 5 && v.ci_overlap;
    return v;
}

struct AdjustmentSearchResult {
    std::vector<size_t> subset; // covariate column indices
    bool balanced = false;      // false: no subset met the threshold, full set returned
};

namespace detail {

// Post-IPW standardized mean difference of column j between arms.
inline double weighted_smd(const CausalData& d, const std::vector<double>& e, size_t j) {
    double w1 = 0, w1x = 0, w0 = 0, w0x = 0;
    double s1 = 0, s0 = 0;
    long n1 = 0, n0 = 0;
    for (size_t i = 0; i < d.n(); ++i) {
        double x = d.z[i][j];
        if (d.t[i]) {
            double w = 1.0 / e[i];
            w1 += w;
            w1x += w * x;
            ++n1;
        } else {
            double w = 1.0 / (1.0 - e[i]);
            w0 += w;
            w0x += w * x;
            ++n0;
        }
    }
    double m1 = w1x / w1, m0 = w0x / w0;
    // pooled unweighted sd
    double mean1 = 0, mean0 = 0;
    for (size_t i = 0; i < d.n(); ++i) (d.t[i] ? mean1 : mean0) += d.z[i][j];
    mean1 /= n1;
    mean0 /= n0;
    for (size_t i = 0; i < d.n(); ++i) {
        double x = d.z[i][j];
        if (d.t[i])
            s1 += (x - mean1) * (x - mean1);
        else
            s0 += (x - mean0) * (x - mean0);
    }
    double pooled = std::sqrt((s1 + s0) / static_cast<double>(d.n()));
    if (pooled < 1e-12) return 0.0;
    return std::abs(m1 - m0) / pooled;
}

inline CausalData project_columns(const CausalData& d, const std::vector<size_t>& cols) {
    CausalData out;
    out.t = d.t;
    out.y = d.y;
    out.ids = d.ids;
    out.z.resize(d.n());
    for (size_t i = 0; i < d.n(); ++i) {
        out.z[i].reserve(cols.size());
        for (size_t c : cols) out.z[i].push_back(d.z[i][c]);
    }
    return out;
}

inline bool next_combination(std::vector<size_t>& comb, size_t n) {
    size_t k = comb.size();
    for (size_t i = k; i-- > 0;) {
        if (comb[i] < n - (k - i)) {
            ++comb[i];
            for (size_t j = i + 1; j < k; ++j) comb[j] = comb[j - 1] + 1;
            return true;
        }
    }
    return false;
}

} // namespace detail

// Balance-based proxy for the minimal sufficient adjustment set: subsets are
// scanned by increasing size (lexicographic within a size); the first subset
// whose post-IPW standardized mean differences are all <= threshold wins.
inline AdjustmentSearchResult minimal_adjustment_search(const CausalData& d,
                                                        const std::vector<size_t>& candidates,
                                                        size_t max_size,
                                                        double balance_threshold = 0.1,
                                                        double clip = 0.01) {
    if (candidates.empty()) throw InvalidInput("minimal_adjustment_search: empty candidates");
    max_size = std::min(max_size, candidates.size());
    long n1 = 0;
    for (int t : d.t) n1 += t;
    for (size_t size = 0; size <= max_size; ++size) {
        std::vector<size_t> comb(size);
        for (size_t i = 0; i < size; ++i) comb[i] = i;
        bool more = true;
        while (more) {
            std::vector<size_t> subset;
            subset.reserve(size);
            for (size_t i : comb) subset.push_back(candidates[i]);
            std::vector<double> e(d.n());
            if (subset.empty()) {
                double rate = std::clamp(static_cast<double>(n1) / d.n(), clip, 1.0 - clip);
                std::fill(e.begin(), e.end(), rate);
            } else {
                CausalData sub = detail::project_columns(d, subset);
                LogisticFit fit = fit_propensity(sub);
                for (size_t i = 0; i < d.n(); ++i)
                    e[i] = std::clamp(predict_prob(fit, sub.z[i]), clip, 1.0 - clip);
            }
            bool balanced = true;
            for (size_t c : candidates) {
                if (detail::weighted_smd(d, e, c) > balance_threshold) {
                    balanced = false;
                    break;
                }
            }
            if (balanced) return {subset, true};
            more = size > 0 && detail::next_combination(comb, candidates.size());
            if (size == 0) break;
        }
    }
    return {candidates, false};
}

} // namespace hga
