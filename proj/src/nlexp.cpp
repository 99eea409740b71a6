#include "ppde/nlexp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "ppde/detail/backward.hpp"

namespace ppde {

using detail::backward_table;

namespace {

void check_at(const StoppingRegion& upto, NodeId at) {
    if (!upto.dominates(at)) {
        throw std::invalid_argument(
            "stopping region marks an ancestor of the evaluation node");
    }
}

}  // namespace

void require_compatible(DriftBound bound, const PathTree& tree) {
    if (bound.L < 0.0) {
        throw std::invalid_argument("drift bound must be nonnegative");
    }
    if (bound.L * tree.step() > 1.0) {
        throw std::invalid_argument(
            "drift bound violates L*sqrt(dt) <= 1: tilted probability leaves [0,1]");
    }
}

DriftControl::DriftControl(const PathTree& tree, DriftBound bound, double fill)
    : tree_(tree), bound_(bound), mu_(tree.node_count(), fill) {
    require_compatible(bound, tree);
    if (std::abs(fill) > bound.L) {
        throw std::invalid_argument("drift fill exceeds the bound");
    }
}

nlohmann::json DriftControl::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t i = 0; i < tree_.node_count(); ++i) {
        NodeId n = tree_.node_at(i);
        if (tree_.is_leaf(n)) continue;
        j[tree_.format_point(n)] = mu_[i];
    }
    return j;
}

double one_step_sup(double v_up, double v_down, DriftBound bound, double dt) {
    if (bound.L < 0.0 || bound.L * std::sqrt(dt) > 1.0) {
        throw std::invalid_argument("drift bound violates L*sqrt(dt) <= 1");
    }
    double h = std::sqrt(dt);
    return std::max(one_step_expect(v_up, v_down, bound.L, h),
                    one_step_expect(v_up, v_down, -bound.L, h));
}

double one_step_inf(double v_up, double v_down, DriftBound bound, double dt) {
    if (bound.L < 0.0 || bound.L * std::sqrt(dt) > 1.0) {
        throw std::invalid_argument("drift bound violates L*sqrt(dt) <= 1");
    }
    double h = std::sqrt(dt);
    return std::min(one_step_expect(v_up, v_down, bound.L, h),
                    one_step_expect(v_up, v_down, -bound.L, h));
}

TreeProcess conditional_sup(const TreeProcess& x, const StoppingRegion& upto,
                            DriftBound bound) {
    require_compatible(bound, x.tree());
    double h = x.tree().step();
    return backward_table(x, upto, [&](NodeId, double vu, double vd) {
        return std::max(one_step_expect(vu, vd, bound.L, h),
                        one_step_expect(vu, vd, -bound.L, h));
    });
}

TreeProcess conditional_inf(const TreeProcess& x, const StoppingRegion& upto,
                            DriftBound bound) {
    require_compatible(bound, x.tree());
    double h = x.tree().step();
    return backward_table(x, upto, [&](NodeId, double vu, double vd) {
        return std::min(one_step_expect(vu, vd, bound.L, h),
                        one_step_expect(vu, vd, -bound.L, h));
    });
}

double sup_expectation(const TreeProcess& x, NodeId at, const StoppingRegion& upto,
                       DriftBound bound) {
    check_at(upto, at);
    return conditional_sup(x, upto, bound).at(at);
}

double inf_expectation(const TreeProcess& x, NodeId at, const StoppingRegion& upto,
                       DriftBound bound) {
    check_at(upto, at);
    return conditional_inf(x, upto, bound).at(at);
}

DriftControl worst_drift(const TreeProcess& x, const StoppingRegion& upto,
                         DriftBound bound) {
    const PathTree& tree = x.tree();
    TreeProcess v = conditional_sup(x, upto, bound);
    DriftControl control(tree, bound, bound.L);
    for (std::size_t i = 0; i < tree.node_count(); ++i) {
        NodeId n = tree.node_at(i);
        if (tree.is_leaf(n)) continue;
        // +L on ties, matching the sup's own choice.
        control.at(n) =
            (v.at(tree.child(n, 1)) >= v.at(tree.child(n, 0))) ? bound.L : -bound.L;
    }
    return control;
}

TreeProcess conditional_tilted(const TreeProcess& x, const StoppingRegion& upto,
                               const DriftControl& control) {
    if (!(control.tree() == x.tree())) {
        throw std::invalid_argument("control and payoff live on different trees");
    }
    double h = x.tree().step();
    return backward_table(x, upto, [&](NodeId n, double vu, double vd) {
        return one_step_expect(vu, vd, control.at(n), h);
    });
}

double tilted_expectation(const TreeProcess& x, NodeId at, const StoppingRegion& upto,
                          const DriftControl& control) {
    check_at(upto, at);
    return conditional_tilted(x, upto, control).at(at);
}

TreeProcess controlled_value(const TreeProcess& running,
                             const std::vector<double>& terminal, double lambda,
                             DriftBound bound) {
    const PathTree& tree = running.tree();
    require_compatible(bound, tree);
    if (terminal.size() != tree.leaf_count()) {
        throw std::invalid_argument("terminal values must cover every leaf");
    }
    double h = tree.step();
    double dt = tree.dt();
    double growth = std::exp(lambda * dt);
    TreeProcess v(tree);
    for (std::uint32_t b = 0; b < tree.leaf_count(); ++b) {
        v.at(tree.leaf(b)) = terminal[b];
    }
    for (int level = tree.depth() - 1; level >= 0; --level) {
        for (std::uint32_t b = 0; b < (1u << level); ++b) {
            NodeId n{level, b};
            double vu = v.at(tree.child(n, 1));
            double vd = v.at(tree.child(n, 0));
            double best = std::max(one_step_expect(vu, vd, bound.L, h),
                                   one_step_expect(vu, vd, -bound.L, h));
            v.at(n) = running.at(n) * dt + growth * best;
        }
    }
    return v;
}

}  // namespace ppde
