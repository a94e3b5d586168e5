#include <catch2/catch_amalgamated.hpp>

#include "hga/patterns.hpp"
#include "hga/rng.hpp"

using namespace hga;

namespace {

IndicatorVector make_iv(NodeId node, std::optional<int> h_avg, std::optional<int> d_min) {
    IndicatorVector iv;
    iv.node = node;
    for (auto& z : iv.z) z = 0;
    iv.z[indicator_slot(MetricKind::H, AggKind::Avg)] = h_avg;
    iv.z[indicator_slot(MetricKind::D, AggKind::Min)] = d_min;
    return iv;
}

AuditRow make_row(NodeId node, int y, const IndicatorVector& iv, std::vector<double> z = {}) {
    AuditRow r;
    r.node = node;
    r.y = y;
    r.z = std::move(z);
    r.indicators = iv;
    return r;
}

} // namespace

TEST_CASE("pattern validation") {
    PatternSpec empty{"E", {}};
    CHECK_THROWS_AS(empty.validate(), InvalidInput);
    PatternSpec dup{"D", {{MetricKind::H, AggKind::Avg, 1}, {MetricKind::H, AggKind::Avg, 0}}};
    CHECK_THROWS_AS(dup.validate(), InvalidInput);
    PatternSpec bad{"B", {{MetricKind::H, AggKind::Avg, 2}}};
    CHECK_THROWS_AS(bad.validate(), InvalidInput);
    for (const auto& p : builtin_patterns()) CHECK_NOTHROW(p.validate());
}

TEST_CASE("builtin pattern definitions") {
    auto ps = builtin_patterns();
    REQUIRE(ps.size() == 3);
    CHECK(ps[0].name == "P1");
    REQUIRE(ps[0].clauses.size() == 2);
    CHECK(ps[1].name == "P2");
    REQUIRE(ps[1].clauses.size() == 1);
    CHECK(ps[1].clauses[0].metric == MetricKind::D);
    CHECK(ps[1].clauses[0].agg == AggKind::Min);
    CHECK(ps[1].clauses[0].required == 1);
    CHECK(ps[2].name == "P3");
    CHECK(ps[2].clauses[0].metric == MetricKind::H);
    CHECK(ps[2].clauses[0].agg == AggKind::Avg);
}

TEST_CASE("pattern evaluation: match, no-match, undefined") {
    auto ps = builtin_patterns();
    auto both = make_iv(0, 1, 1);
    auto h_only = make_iv(1, 1, 0);
    auto none = make_iv(2, 0, 0);
    auto h_undef = make_iv(3, std::nullopt, 1);
    CHECK(evaluate_pattern(ps[0], both) == PatternEval::Match);
    CHECK(evaluate_pattern(ps[0], h_only) == PatternEval::NoMatch);
    CHECK(evaluate_pattern(ps[0], h_undef) == PatternEval::Undefined);
    CHECK(evaluate_pattern(ps[1], h_undef) == PatternEval::Match); // only reads D,min
    CHECK(evaluate_pattern(ps[2], h_undef) == PatternEval::Undefined);
    CHECK(evaluate_pattern(ps[2], none) == PatternEval::NoMatch);
}

TEST_CASE("occurrence stats on a hand fixture") {
    std::vector<IndicatorVector> ds1 = {
        make_iv(0, 1, 1), // P1, P2, P3
        make_iv(1, 1, 0), // P3
        make_iv(2, 0, 0), // none
        make_iv(3, std::nullopt, 1), // excluded
    };
    std::vector<IndicatorVector> ds2 = {make_iv(0, 0, 1), make_iv(1, 0, 1)}; // P2 only
    auto rep = occurrence_stats({ds1, ds2}, builtin_patterns());
    REQUIRE(rep.per_dataset.size() == 2);
    CHECK(rep.n_evaluated[0] == 3);
    CHECK(rep.n_excluded[0] == 1);
    CHECK(rep.per_dataset[0][0] == Catch::Approx(1.0 / 3));
    CHECK(rep.per_dataset[0][1] == Catch::Approx(1.0 / 3));
    CHECK(rep.per_dataset[0][2] == Catch::Approx(2.0 / 3));
    CHECK(rep.none_fraction[0] == Catch::Approx(1.0 / 3));
    CHECK(rep.per_dataset[1][1] == Catch::Approx(1.0));
    CHECK(rep.none_fraction[1] == Catch::Approx(0.0));
    CHECK(rep.macro[0] == Catch::Approx(1.0 / 6));
    CHECK(rep.macro[1] == Catch::Approx(2.0 / 3));
    CHECK(rep.macro[2] == Catch::Approx(1.0 / 3));
    CHECK(rep.macro_none == Catch::Approx(1.0 / 6));

    std::vector<IndicatorVector> all_undef = {make_iv(0, std::nullopt, std::nullopt)};
    CHECK_THROWS_AS(occurrence_stats({all_undef}, builtin_patterns()), InvalidInput);
}

TEST_CASE("pattern audit stops at the adequacy gate on tiny tables") {
    AuditTable table;
    table.covariate_names = {};
    for (int i = 0; i < 10; ++i)
        table.rows.push_back(make_row(i, i % 2, make_iv(i, i % 2, 0)));
    AuditConfig cfg;
    auto rep = run_pattern_audit(table, builtin_patterns()[2], cfg);
    CHECK(rep.n == 10);
    CHECK_FALSE(rep.adequacy.pass);
    CHECK(rep.estimates.empty());
    REQUIRE_FALSE(rep.stage_notes.empty());
    CHECK(rep.stage_notes[0] == "adequacy failed: downstream stages skipped");
    auto all = audit_patterns(table, builtin_patterns(), cfg);
    for (const auto& r : all) {
        CHECK_FALSE(r.pass);
        CHECK_FALSE(r.q.has_value());
    }
}

TEST_CASE("undefined rows are excluded per pattern, not globally") {
    AuditTable table;
    for (int i = 0; i < 100; ++i) {
        std::optional<int> h = i < 20 ? std::nullopt : std::optional<int>(i % 2);
        table.rows.push_back(make_row(i, i % 3 == 0, make_iv(i, h, (i / 2) % 2)));
    }
    AuditConfig cfg;
    auto p3 = run_pattern_audit(table, builtin_patterns()[2], cfg);
    CHECK(p3.excluded == 20);
    CHECK(p3.n == 80);
    auto p2 = run_pattern_audit(table, builtin_patterns()[1], cfg);
    CHECK(p2.excluded == 0);
    CHECK(p2.n == 100);
}

TEST_CASE("planted pattern effect survives the full audit") {
    CounterRng rng(123, 0);
    AuditTable table;
    table.covariate_names = {"x"};
    const int n = 1200;
    // row 0 is a control with y = 0 so the matched outcome under constant
    // propensities is pinned down
    for (int i = 0; i < n; ++i) {
        int h = i == 0 ? 0 : rng.bernoulli(0.5);
        int dmin = rng.bernoulli(0.5);
        int y = i == 0 ? 0 : rng.bernoulli(0.30 + 0.25 * h);
        table.rows.push_back(make_row(i, y, make_iv(i, h, dmin), {rng.normal()}));
    }
    AuditConfig cfg;
    cfg.bootstrap_n = 50;
    cfg.base_seed = 9;
    auto reports = audit_patterns(table, builtin_patterns(), cfg);
    REQUIRE(reports.size() == 3);
    const auto& p3 = reports[2];
    REQUIRE(p3.adequacy.pass);
    REQUIRE(p3.estimates.size() == 5);
    const auto& dim = p3.estimates.at(Method::DiffMeans);
    CHECK(dim.ate == Catch::Approx(0.25).margin(0.06));
    // treatment is randomized: the balance search should keep nothing
    CHECK(p3.adjustment_set.empty());
    // with intercept-only nuisances IPW, DR, TMLE collapse to the difference
    CHECK(p3.estimates.at(Method::Ipw).ate == Catch::Approx(dim.ate).margin(1e-6));
    CHECK(p3.estimates.at(Method::Dr).ate == Catch::Approx(dim.ate).margin(1e-6));
    CHECK(p3.estimates.at(Method::Tmle).ate == Catch::Approx(dim.ate).margin(1e-6));
    REQUIRE(p3.q);
    CHECK(*p3.q <= cfg.alpha);
    REQUIRE(dim.rr);
    CHECK(*dim.rr > 1.1);
    REQUIRE(p3.e_val);
    CHECK(*p3.e_val == Catch::Approx(e_value(*dim.rr)));
    REQUIRE(p3.counterfactual);
    CHECK(p3.counterfactual->mean_uplift == Catch::Approx(dim.ate).margin(1e-6));
    CHECK(p3.pass);

    // P2's indicator is independent of the outcome
    const auto& p2 = reports[1];
    REQUIRE(p2.q);
    const auto& dim2 = p2.estimates.at(Method::DiffMeans);
    CHECK(std::abs(dim2.ate) < 0.06);
    CHECK_FALSE(p2.pass);

    // P1 inherits a diluted but positive effect
    const auto& p1 = reports[0];
    CHECK(p1.estimates.at(Method::DiffMeans).ate > 0.05);
}

TEST_CASE("explicit adjustment covariates are honored and validated") {
    CounterRng rng(5, 0);
    AuditTable table;
    table.covariate_names = {"x", "w"};
    for (int i = 0; i < 400; ++i) {
        int h = rng.bernoulli(0.5);
        int y = rng.bernoulli(0.3 + 0.2 * h);
        table.rows.push_back(make_row(i, y, make_iv(i, h, 0), {rng.normal(), rng.normal()}));
    }
    AuditConfig cfg;
    cfg.bootstrap_n = 20;
    cfg.adjustment_covariates = {"w"};
    auto rep = run_pattern_audit(table, builtin_patterns()[2], cfg);
    CHECK(rep.adjustment_set == std::vector<std::string>{"w"});
    REQUIRE(rep.estimates.size() == 5);

    cfg.adjustment_covariates = {"missing"};
    auto bad = run_pattern_audit(table, builtin_patterns()[2], cfg);
    REQUIRE_FALSE(bad.stage_notes.empty());
    CHECK(bad.stage_notes.back().find("missing") != std::string::npos);
    CHECK(bad.estimates.count(Method::DiffMeans) == 1);
    CHECK(bad.estimates.size() == 1); // adjusted stages skipped
}

TEST_CASE("joint BH correction spans all patterns") {
    CounterRng rng(44, 0);
    AuditTable table;
    for (int i = 0; i < 800; ++i) {
        int h = rng.bernoulli(0.5);
        int dmin = rng.bernoulli(0.5);
        int y = rng.bernoulli(0.30 + 0.22 * h);
        table.rows.push_back(make_row(i, y, make_iv(i, h, dmin)));
    }
    AuditConfig cfg;
    cfg.bootstrap_n = 0;
    auto reports = audit_patterns(table, builtin_patterns(), cfg);
    std::vector<double> ps;
    for (const auto& r : reports) ps.push_back(*r.estimates.at(Method::DiffMeans).p_value);
    auto fdr = bh_fdr(ps, cfg.alpha);
    for (size_t i = 0; i < 3; ++i) {
        REQUIRE(reports[i].q);
        CHECK(*reports[i].q == Catch::Approx(fdr.q_values[i]));
    }
}
