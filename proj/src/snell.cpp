#include "ppde/snell.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace ppde {

SnellResult snell_envelope(const TreeProcess& x, const StoppingRegion& horizon,
                           DriftBound bound) {
    const PathTree& tree = x.tree();
    horizon.require_valid();
    require_compatible(bound, tree);
    if (!x.all_finite()) {
        throw std::invalid_argument("obstacle has non-finite values");
    }
    double h = tree.step();

    TreeProcess y(tree);
    std::vector<std::uint8_t> frozen(tree.node_count(), 0);
    for (std::size_t i = 0; i < tree.node_count(); ++i) {
        NodeId n = tree.node_at(i);
        if (horizon.marked(n)) {
            y[i] = x[i];
            frozen[i] = 1;
        } else if (n.level > 0 && frozen[tree.index(tree.parent(n))]) {
            y[i] = y[tree.index(tree.parent(n))];
            frozen[i] = 1;
        }
    }
    for (int level = tree.depth() - 1; level >= 0; --level) {
        for (std::uint32_t b = 0; b < (1u << level); ++b) {
            NodeId n{level, b};
            std::size_t i = tree.index(n);
            if (frozen[i]) continue;
            double vu = y.at(tree.child(n, 1));
            double vd = y.at(tree.child(n, 0));
            double cont = std::max(one_step_expect(vu, vd, bound.L, h),
                                   one_step_expect(vu, vd, -bound.L, h));
            y[i] = std::max(x[i], cont);
        }
    }

    // First contact per path; the horizon itself guarantees coverage.
    StoppingRegion contact(tree);
    for (std::uint32_t leaf = 0; leaf < tree.leaf_count(); ++leaf) {
        for (int k = 0; k <= tree.depth(); ++k) {
            NodeId n{k, leaf >> (tree.depth() - k)};
            if (horizon.marked(n) || y.at(n) == x.at(n)) {
                contact.set(n);
                break;
            }
        }
    }
    double value = y.root();
    return SnellResult{std::move(y), std::move(contact), horizon, value};
}

namespace {

// Enumerates stopping rules on the subtree at `n` (stop here, or continue
// with any pair of sub-rules), evaluating the upper expectation of the
// stopped payoff in the same pass. Each recursion level returns the list
// of attainable values at `n`, one per rule.
void enumerate_values(const TreeProcess& x, const StoppingRegion& horizon,
                      DriftBound bound, NodeId n, std::vector<double>& out) {
    out.clear();
    if (horizon.marked(n)) {
        out.push_back(x.at(n));
        return;
    }
    const PathTree& tree = x.tree();
    double h = tree.step();
    std::vector<double> up, down;
    enumerate_values(x, horizon, bound, tree.child(n, 1), up);
    enumerate_values(x, horizon, bound, tree.child(n, 0), down);
    out.reserve(1 + up.size() * down.size());
    out.push_back(x.at(n));
    for (double vu : up) {
        for (double vd : down) {
            out.push_back(std::max(one_step_expect(vu, vd, bound.L, h),
                                   one_step_expect(vu, vd, -bound.L, h)));
        }
    }
}

}  // namespace

double brute_force_snell(const TreeProcess& x, const StoppingRegion& horizon,
                         DriftBound bound, int max_depth) {
    const PathTree& tree = x.tree();
    if (tree.depth() > max_depth) {
        throw std::invalid_argument(
            "exhaustive stopping search limited to shallow trees");
    }
    horizon.require_valid();
    require_compatible(bound, tree);
    std::vector<double> values;
    enumerate_values(x, horizon, bound, NodeId{0, 0}, values);
    return *std::max_element(values.begin(), values.end());
}

std::optional<NodeId> fundamental_point(const TreeProcess& u,
                                        const StoppingRegion& horizon,
                                        DriftBound bound) {
    const PathTree& tree = u.tree();
    double at_horizon = sup_expectation(u, NodeId{0, 0}, horizon, bound);
    if (!(u.root() > at_horizon)) {
        return std::nullopt;
    }
    SnellResult snell = snell_envelope(u, horizon, bound);
    for (std::size_t i = 0; i < tree.node_count(); ++i) {
        NodeId n = tree.node_at(i);
        if (snell.optimal_region.marked(n) && !horizon.marked(n)) {
            return n;
        }
    }
    return std::nullopt;  // unreachable when the hypothesis holds
}

}  // namespace ppde
