#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ppde/snell.hpp"
#include "ppde/viscosity.hpp"
#include "support/brute.hpp"

using namespace ppde;

namespace {

TreeProcess runmax_process(const PathTree& tree) {
    return make_process(tree, [](const PathTree& t, NodeId n) {
        double best = 0.0;
        for (int j = 0; j <= n.level; ++j) best = std::max(best, t.value_at(n, j));
        return best;
    });
}

}  // namespace

TEST_CASE("snell envelope on one-step trees") {
    PathTree tree(1, 1.0);
    StoppingRegion leaves = StoppingRegion::leaves(tree);
    DriftBound L{0.0};

    SUBCASE("constant obstacle stops immediately") {
        TreeProcess c(tree, 0.7);
        SnellResult r = snell_envelope(c, leaves, L);
        CHECK(r.value == 0.7);
        CHECK(r.optimal_region.marked({0, 0}));
        CHECK(r.optimal_region.is_valid());
        CHECK(brute_force_snell(c, leaves, L) == 0.7);
    }
    SUBCASE("continuation wins when the mean beats the spot") {
        TreeProcess x(tree);
        x.at({0, 0}) = 0.4;
        x.at({1, 1}) = 1.0;
        x.at({1, 0}) = 0.0;
        SnellResult r = snell_envelope(x, leaves, L);
        CHECK(r.value == doctest::Approx(0.5));
        CHECK_FALSE(r.optimal_region.marked({0, 0}));
        CHECK(r.optimal_region.marked({1, 0}));
        CHECK(r.optimal_region.marked({1, 1}));
        CHECK(brute_force_snell(x, leaves, L) == doctest::Approx(0.5));
    }
    SUBCASE("spot wins when it beats the mean") {
        TreeProcess x(tree);
        x.at({0, 0}) = 0.6;
        x.at({1, 1}) = 1.0;
        x.at({1, 0}) = 0.0;
        SnellResult r = snell_envelope(x, leaves, L);
        CHECK(r.value == 0.6);
        CHECK(r.optimal_region.marked({0, 0}));
        CHECK(brute_force_snell(x, leaves, L) == doctest::Approx(0.6));
    }
}

TEST_CASE("envelope guarantees hold exactly") {
    PathTree tree(4, 0.25);
    StoppingRegion leaves = StoppingRegion::leaves(tree);
    DriftBound L{1.0};
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        TreeProcess x = testing::dyadic_process(tree, seed);
        SnellResult r = snell_envelope(x, leaves, L);

        // dominance and horizon agreement
        for (std::size_t i = 0; i < x.size(); ++i) CHECK(r.envelope[i] >= x[i]);
        for (std::uint32_t b = 0; b < tree.leaf_count(); ++b) {
            CHECK(r.envelope.at(tree.leaf(b)) == x.at(tree.leaf(b)));
        }

        // exact contact on the optimal region and the stopped value
        for (std::size_t i = 0; i < x.size(); ++i) {
            NodeId n = tree.node_at(i);
            if (r.optimal_region.marked(n)) CHECK(r.envelope[i] == x[i]);
        }
        CHECK(sup_expectation(x, {0, 0}, r.optimal_region, L) == r.value);

        // supermartingale with equality strictly before the contact
        double h = tree.step();
        for (std::size_t i = 0; i < x.size(); ++i) {
            NodeId n = tree.node_at(i);
            if (tree.is_leaf(n)) continue;
            double vu = r.envelope.at(tree.child(n, 1));
            double vd = r.envelope.at(tree.child(n, 0));
            double cont = one_step_sup(vu, vd, L, tree.dt());
            CHECK(r.envelope[i] >= cont);
            if (!r.optimal_region.marked(n) && r.optimal_region.dominates(n)) {
                CHECK(r.envelope[i] == cont);
            }
            // plain supermartingale under any admissible drift, interior
            // values included (the tilted mean is affine in the drift)
            for (double mu : {L.L, -L.L, 0.0, 0.5 * L.L, -0.75 * L.L}) {
                CHECK(one_step_expect(vu, vd, mu, h) <= r.envelope[i] + 1e-14);
            }
        }
    }
}

TEST_CASE("contact region is pathwise-first") {
    PathTree tree(5, 0.04);
    DriftBound L{1.0};
    TreeProcess x = testing::dyadic_process(tree, 23);
    SnellResult r = snell_envelope(x, StoppingRegion::leaves(tree), L);
    for (std::uint32_t leaf = 0; leaf < tree.leaf_count(); ++leaf) {
        int stop = r.optimal_region.mark_level_on_path(leaf);
        for (int k = 0; k < stop; ++k) {
            NodeId n{k, leaf >> (tree.depth() - k)};
            CHECK(r.envelope.at(n) > x.at(n));
        }
    }
}

TEST_CASE("the depth cap works end to end") {
    PathTree tree(PathTree::kMaxDepth, 0.0625);
    DriftBound L{1.0};
    TreeProcess x = testing::dyadic_process(tree, 3);
    SnellResult r = snell_envelope(x, StoppingRegion::leaves(tree), L);
    CHECK(r.optimal_region.is_valid());
    CHECK(r.value >= x.root());
    CHECK(sup_expectation(x, {0, 0}, r.optimal_region, L) == r.value);
}

TEST_CASE("envelope matches the exhaustive stopping search") {
    for (int depth : {2, 3, 4}) {
        PathTree tree(depth, 0.25);
        StoppingRegion leaves = StoppingRegion::leaves(tree);
        for (double L : {0.0, 1.0}) {
            for (std::uint64_t seed = 1; seed <= 5; ++seed) {
                TreeProcess x = testing::dyadic_process(tree, 1000 * depth + seed);
                SnellResult r = snell_envelope(x, leaves, {L});
                CHECK(r.value ==
                      doctest::Approx(brute_force_snell(x, leaves, {L})).epsilon(1e-14));
            }
        }
    }
    PathTree deep(6, 0.04);
    TreeProcess x(deep, 0.0);
    CHECK_THROWS_AS(brute_force_snell(x, StoppingRegion::leaves(deep), {0.5}),
                    std::invalid_argument);
}

TEST_CASE("increasing obstacles stop at the horizon") {
    PathTree tree(3, 0.25);
    StoppingRegion leaves = StoppingRegion::leaves(tree);
    DriftBound L{0.5};
    TreeProcess x = runmax_process(tree);
    double at_horizon = sup_expectation(x, {0, 0}, leaves, L);
    CHECK(brute_force_snell(x, leaves, L) == doctest::Approx(at_horizon));
    CHECK(snell_envelope(x, leaves, L).value == doctest::Approx(at_horizon));
}

TEST_CASE("general horizons restrict the search") {
    PathTree tree(3, 0.25);
    DriftBound L{1.0};
    TreeProcess x = testing::dyadic_process(tree, 77);
    StoppingRegion horizon = hitting_time(tree, 2 * tree.dt(), {-0.75, 0.75});
    SnellResult r = snell_envelope(x, horizon, L);
    CHECK(r.value == doctest::Approx(brute_force_snell(x, horizon, L)));
    // beyond the horizon the envelope is frozen, not recomputed
    for (std::uint32_t leaf = 0; leaf < tree.leaf_count(); ++leaf) {
        NodeId mark = horizon.mark_on_path(leaf);
        CHECK(r.envelope.at(tree.leaf(leaf)) == x.at(mark));
    }
}

TEST_CASE("fundamental point produces a zero-slope subjet element") {
    DriftBound L{0.5};
    SUBCASE("deterministic decay peaks at the root") {
        PathTree tree(2, 1.0);
        TreeProcess u = make_process(tree, [](const PathTree& t, NodeId n) {
            return 2.0 - t.time_of(n);
        });
        auto point = fundamental_point(u, StoppingRegion::leaves(tree), L);
        REQUIRE(point.has_value());
        CHECK(*point == NodeId{0, 0});
    }
    SUBCASE("constants violate the strict-gain hypothesis") {
        PathTree tree(2, 1.0);
        TreeProcess u(tree, 1.0);
        CHECK_FALSE(fundamental_point(u, StoppingRegion::leaves(tree), L).has_value());
    }
    SUBCASE("engineered two-step case") {
        PathTree tree(2, 0.25);
        StoppingRegion leaves = StoppingRegion::leaves(tree);
        TreeProcess u = testing::dyadic_process(tree, 13);
        u.at({0, 0}) = 1.0;  // forced above the horizon expectation (values <= 1)
        REQUIRE(u.root() > sup_expectation(u, {0, 0}, leaves, L));
        auto point = fundamental_point(u, leaves, L);
        REQUIRE(point.has_value());
        CHECK(point->level < 2);
        SnellResult r = snell_envelope(u, leaves, L);
        CHECK(r.envelope.at(*point) == u.at(*point));

        // (0, 0) is admissible at the returned node for the remaining horizon
        PathTree sub(tree.depth() - point->level, tree.dt());
        JetCandidate cand{0.0, 0.0, StoppingRegion::leaves(sub)};
        CHECK(subjet_test(u, *point, cand, L));
    }
}
