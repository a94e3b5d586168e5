#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "hga/metrics.hpp"
#include "test_util.hpp"

using namespace hga;
using testutil::RawEdge;

TEST_CASE("homophily counts labeled neighbors only") {
    // v=0 label 0; neighbors 1,2,3 labeled 0; neighbor 4 unlabeled
    auto g = testutil::make_graph({0, 0, 0, 0, -1},
                                  {{0, "r", 1}, {0, "r", 2}, {0, "r", 3}, {0, "r", 4}});
    CHECK(homophily(g, 0, g.neighborhood(0, 0)) == 1.0);

    auto g2 = testutil::make_graph({0, 0, 1}, {{0, "r", 1}, {0, "r", 2}});
    CHECK(homophily(g2, 0, g2.neighborhood(0, 0)) == 0.5);

    auto g3 = testutil::make_graph({0, -1}, {{0, "r", 1}});
    CHECK(!homophily(g3, 0, g3.neighborhood(0, 0)).has_value());
    CHECK_THROWS_AS(homophily(g3, 1, g3.neighborhood(1, 0)), InvalidInput);
}

TEST_CASE("local label distribution counts and normalizes") {
    auto g = testutil::make_graph({0, 0, 0, 1}, {{0, "r", 1}, {0, "r", 2}, {0, "r", 3}});
    auto local = local_label_distribution(g, g.neighborhood(0, 0));
    REQUIRE(local.has_value());
    CHECK((*local)[0] == Catch::Approx(2.0 / 3.0));
    CHECK((*local)[1] == Catch::Approx(1.0 / 3.0));

    auto g2 = testutil::make_graph({0, -1}, {{0, "r", 1}});
    CHECK(!local_label_distribution(g2, g2.neighborhood(0, 0)).has_value());
}

TEST_CASE("global label distribution over labeled nodes") {
    auto g = testutil::make_graph({0, 0, 1, 1}, {});
    auto p = global_label_distribution(g);
    CHECK(p == std::vector<double>{0.5, 0.5});
    auto g2 = testutil::make_graph({0, 0, 0, 1}, {});
    auto p2 = global_label_distribution(g2);
    CHECK(p2 == std::vector<double>{0.75, 0.25});
    auto g3 = testutil::make_graph({-1, -1}, {});
    g3.labels = {-1, -1};
    CHECK_THROWS_AS(global_label_distribution(g3), InvalidInput);
}

TEST_CASE("tv discrepancy") {
    CHECK(tv_discrepancy({0.3, 0.7}, {0.3, 0.7}) == 0.0);
    CHECK(tv_discrepancy({1.0, 0.0}, {0.5, 0.5}) == 0.5);
    CHECK_THROWS_AS(tv_discrepancy({1.0}, {0.5, 0.5}), InvalidInput);

    std::mt19937 rng(3);
    std::uniform_real_distribution<double> ud(0, 1);
    for (int trial = 0; trial < 50; ++trial) {
        int c = 2 + trial % 4;
        std::vector<double> a(c), b(c);
        double sa = 0, sb = 0;
        for (int i = 0; i < c; ++i) {
            a[i] = ud(rng);
            b[i] = ud(rng);
            sa += a[i];
            sb += b[i];
        }
        for (int i = 0; i < c; ++i) {
            a[i] /= sa;
            b[i] /= sb;
        }
        double l1 = 0;
        for (int i = 0; i < c; ++i) l1 += std::abs(a[i] - b[i]);
        CHECK(tv_discrepancy(a, b) == Catch::Approx(0.5 * l1).margin(1e-12));
        CHECK(tv_discrepancy(a, b) >= 0.0);
        CHECK(tv_discrepancy(a, b) <= 1.0);
    }
}

TEST_CASE("relation aggregation") {
    AggTriple agg = aggregate_relations({0.2, 0.8});
    CHECK(*agg.min == 0.2);
    CHECK(*agg.max == 0.8);
    CHECK(*agg.avg == Catch::Approx(0.5));

    AggTriple one = aggregate_relations({std::nullopt, 0.7});
    CHECK(*one.min == 0.7);
    CHECK(*one.max == 0.7);
    CHECK(*one.avg == 0.7);

    CHECK(!aggregate_relations({std::nullopt, std::nullopt}).defined());

    std::mt19937 rng(11);
    std::uniform_real_distribution<double> ud(0, 1);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::optional<double>> vals(5);
        double lo = 2, hi = -1, sum = 0;
        for (auto& v : vals) {
            v = ud(rng);
            lo = std::min(lo, *v);
            hi = std::max(hi, *v);
            sum += *v;
        }
        AggTriple a = aggregate_relations(vals);
        CHECK(*a.min == lo);
        CHECK(*a.max == hi);
        CHECK(*a.avg == Catch::Approx(sum / 5));
        CHECK(*a.min <= *a.avg);
        CHECK(*a.avg <= *a.max);
    }
}

TEST_CASE("indicators use strict less-than") {
    NodeStructuralProfile prof;
    prof.node = 0;
    prof.h_proj = 0.4;
    prof.h_agg = {0.3, 0.9, 0.6};
    prof.d_agg = {};
    IndicatorVector iv = compute_indicators(prof);
    CHECK(*iv.z[indicator_slot(MetricKind::H, AggKind::Min)] == 0);
    CHECK(*iv.z[indicator_slot(MetricKind::H, AggKind::Max)] == 1);
    CHECK(*iv.z[indicator_slot(MetricKind::H, AggKind::Avg)] == 1);
    // D side undefined: no projection value and no aggregates
    CHECK(!iv.z[indicator_slot(MetricKind::D, AggKind::Min)].has_value());

    prof.h_proj = 0.6; // tie with avg
    iv = compute_indicators(prof);
    CHECK(*iv.z[indicator_slot(MetricKind::H, AggKind::Avg)] == 0);
}

TEST_CASE("profiles match brute-force oracles on random graphs") {
    std::mt19937 rng(101);
    for (int trial = 0; trial < 100; ++trial) {
        auto rg = testutil::random_graph(rng, 50, 3);
        HomoProjection proj = project_homogeneous(rg.g);
        auto profiles = compute_profiles(rg.g, proj);
        auto global = testutil::oracle_global(rg.labels, rg.num_classes);

        for (const auto& prof : profiles) {
            int v = prof.node;
            std::vector<std::optional<double>> hs, ds;
            for (size_t r = 0; r < rg.g.num_relations(); ++r) {
                auto nbrs = testutil::oracle_neighbors(rg.edges, v, rg.g.relations[r]);
                auto h = testutil::oracle_homophily(rg.labels, nbrs, v);
                auto d = testutil::oracle_tv(rg.labels, nbrs, global, rg.num_classes);
                const auto& m = prof.per_relation[r];
                CHECK(m.n == static_cast<int>(nbrs.size()));
                CHECK(m.h == h);
                CHECK(m.d == d);
                if (m.h) {
                    CHECK(*m.h >= 0.0);
                    CHECK(*m.h <= 1.0);
                }
                if (m.d) {
                    CHECK(*m.d >= 0.0);
                    CHECK(*m.d <= 1.0);
                }
                hs.push_back(h);
                ds.push_back(d);
            }
            // aggregate oracle: fold over defined values
            auto fold = [](const std::vector<std::optional<double>>& vals) {
                AggTriple t;
                double sum = 0;
                int n = 0;
                for (const auto& x : vals) {
                    if (!x) continue;
                    if (n == 0) t.min = t.max = *x;
                    t.min = std::min(*t.min, *x);
                    t.max = std::max(*t.max, *x);
                    sum += *x;
                    ++n;
                }
                if (n) t.avg = sum / n;
                return t;
            };
            AggTriple ho = fold(hs), doo = fold(ds);
            CHECK(prof.h_agg.min == ho.min);
            CHECK(prof.h_agg.max == ho.max);
            CHECK(prof.h_agg.avg == ho.avg);
            CHECK(prof.d_agg.min == doo.min);
            CHECK(prof.d_agg.max == doo.max);
            CHECK(prof.d_agg.avg == doo.avg);

            auto pn = testutil::oracle_neighbors(rg.edges, v, std::nullopt);
            CHECK(prof.h_proj == testutil::oracle_homophily(rg.labels, pn, v));
            CHECK(prof.d_proj == testutil::oracle_tv(rg.labels, pn, global, rg.num_classes));

            IndicatorVector iv = compute_indicators(prof);
            auto check_ind = [&](MetricKind m, AggKind a, const std::optional<double>& pv,
                                 const std::optional<double>& av) {
                const auto& z = iv.z[indicator_slot(m, a)];
                if (pv && av)
                    CHECK(*z == (*pv < *av ? 1 : 0));
                else
                    CHECK(!z.has_value());
            };
            check_ind(MetricKind::H, AggKind::Min, prof.h_proj, ho.min);
            check_ind(MetricKind::H, AggKind::Max, prof.h_proj, ho.max);
            check_ind(MetricKind::H, AggKind::Avg, prof.h_proj, ho.avg);
            check_ind(MetricKind::D, AggKind::Min, prof.d_proj, doo.min);
            check_ind(MetricKind::D, AggKind::Max, prof.d_proj, doo.max);
            check_ind(MetricKind::D, AggKind::Avg, prof.d_proj, doo.avg);
        }
    }
}

TEST_CASE("single-relation graphs: hetero metrics equal projection metrics") {
    std::mt19937 rng(55);
    for (int trial = 0; trial < 20; ++trial) {
        auto rg = testutil::random_graph(rng, 40, 1);
        if (rg.g.num_relations() == 0) continue; // edgeless draw
        HomoProjection proj = project_homogeneous(rg.g);
        auto profiles = compute_profiles(rg.g, proj);
        for (const auto& prof : profiles) {
            CHECK(prof.per_relation[0].h == prof.h_proj);
            CHECK(prof.per_relation[0].d == prof.d_proj);
            CHECK(prof.h_agg.min == prof.per_relation[0].h);
            CHECK(prof.h_agg.max == prof.per_relation[0].h);
            CHECK(prof.h_agg.avg == prof.per_relation[0].h);
        }
    }
}

TEST_CASE("metrics are invariant under node relabeling") {
    std::mt19937 rng(77);
    auto rg = testutil::random_graph(rng, 30, 2, 0.0);
    int n = rg.g.num_nodes();
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);

    std::vector<int> labels2(n);
    for (int i = 0; i < n; ++i) labels2[perm[i]] = rg.labels[i];
    std::vector<RawEdge> edges2;
    for (const auto& e : rg.edges) edges2.push_back({perm[e.src], e.rel, perm[e.dst]});
    auto g2 = testutil::make_graph(labels2, edges2, rg.num_classes);

    auto p1 = compute_profiles(rg.g, project_homogeneous(rg.g));
    auto p2 = compute_profiles(g2, project_homogeneous(g2));
    std::map<int, const NodeStructuralProfile*> by_node;
    for (const auto& p : p2) by_node[p.node] = &p;
    for (const auto& p : p1) {
        const auto& q = *by_node.at(perm[p.node]);
        for (size_t r = 0; r < rg.g.num_relations(); ++r) {
            CHECK(p.per_relation[r].h == q.per_relation[r].h);
            CHECK(p.per_relation[r].d == q.per_relation[r].d);
        }
        CHECK(p.h_proj == q.h_proj);
        CHECK(p.d_proj == q.d_proj);
    }
}

TEST_CASE("profile computation is independent of the thread count") {
    std::mt19937 rng(88);
    auto rg = testutil::random_graph(rng, 50, 3, 0.1);
    HomoProjection proj = project_homogeneous(rg.g);
    auto p1 = compute_profiles(rg.g, proj, 1);
    auto p8 = compute_profiles(rg.g, proj, 8);
    REQUIRE(p1.size() == p8.size());
    for (size_t i = 0; i < p1.size(); ++i) {
        CHECK(p1[i].node == p8[i].node);
        CHECK(p1[i].h_agg.avg == p8[i].h_agg.avg);
        CHECK(p1[i].d_agg.avg == p8[i].d_agg.avg);
        CHECK(p1[i].h_proj == p8[i].h_proj);
    }
}
