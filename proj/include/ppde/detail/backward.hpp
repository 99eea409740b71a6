#pragma once

#include <cstdint>
#include <vector>

#include "ppde/pathspace.hpp"

namespace ppde::detail {

// Backward induction from a stopping region: the table equals the stopped
// payoff on and below the region and comb(node, v_up, v_down) above it.
template <typename Combine>
TreeProcess backward_table(const TreeProcess& x, const StoppingRegion& upto,
                           Combine&& comb) {
    const PathTree& tree = x.tree();
    upto.require_valid();
    TreeProcess v(tree);
    std::vector<std::uint8_t> frozen(tree.node_count(), 0);
    for (std::size_t i = 0; i < tree.node_count(); ++i) {
        NodeId n = tree.node_at(i);
        if (upto.marked(n)) {
            v[i] = x[i];
            frozen[i] = 1;
        } else if (n.level > 0 && frozen[tree.index(tree.parent(n))]) {
            v[i] = v[tree.index(tree.parent(n))];
            frozen[i] = 1;
        }
    }
    for (int level = tree.depth() - 1; level >= 0; --level) {
        for (std::uint32_t b = 0; b < (1u << level); ++b) {
            NodeId n{level, b};
            std::size_t i = tree.index(n);
            if (frozen[i]) continue;
            v[i] = comb(n, v.at(tree.child(n, 1)), v.at(tree.child(n, 0)));
        }
    }
    return v;
}

}  // namespace ppde::detail
