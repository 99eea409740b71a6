#include "ppde/decomp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ppde {

DriftControl envelope_worst_drift(const TreeProcess& y, DriftBound bound) {
    const PathTree& tree = y.tree();
    DriftControl control(tree, bound, bound.L);
    for (std::size_t i = 0; i < tree.node_count(); ++i) {
        NodeId n = tree.node_at(i);
        if (tree.is_leaf(n)) continue;
        control.at(n) =
            (y.at(tree.child(n, 1)) >= y.at(tree.child(n, 0))) ? bound.L : -bound.L;
    }
    return control;
}

DoobMeyer doob_meyer(const TreeProcess& y, const DriftControl& control) {
    const PathTree& tree = y.tree();
    if (!(control.tree() == tree)) {
        throw std::invalid_argument("control and process live on different trees");
    }
    double h = tree.step();
    TreeProcess m(tree, 0.0);
    TreeProcess a(tree, 0.0);
    for (int level = 0; level < tree.depth(); ++level) {
        for (std::uint32_t b = 0; b < (1u << level); ++b) {
            NodeId n{level, b};
            NodeId up = tree.child(n, 1);
            NodeId down = tree.child(n, 0);
            double mean = one_step_expect(y.at(up), y.at(down), control.at(n), h);
            if (!(mean <= y.at(n))) {
                throw std::invalid_argument(
                    "not a supermartingale under the control at node " +
                    tree.format_point(n));
            }
            double da = y.at(n) - mean;
            a.at(up) = a.at(n) + da;
            a.at(down) = a.at(n) + da;
            m.at(up) = m.at(n) + (y.at(up) - mean);
            m.at(down) = m.at(n) + (y.at(down) - mean);
        }
    }
    return DoobMeyer{std::move(m), std::move(a)};
}

MartingaleRepr martingale_repr(const TreeProcess& m, const DriftControl& control,
                               double tol) {
    const PathTree& tree = m.tree();
    if (!(control.tree() == tree)) {
        throw std::invalid_argument("control and process live on different trees");
    }
    double h = tree.step();
    TreeProcess z(tree, 0.0);
    for (std::size_t i = 0; i < tree.node_count(); ++i) {
        NodeId n = tree.node_at(i);
        if (tree.is_leaf(n)) continue;
        double mu = m.at(tree.child(n, 1));
        double md = m.at(tree.child(n, 0));
        double mean = one_step_expect(mu, md, control.at(n), h);
        if (std::abs(mean - m.at(n)) > tol * std::max(1.0, std::abs(m.at(n)))) {
            throw std::invalid_argument(
                "not a martingale under the control at node " + tree.format_point(n));
        }
        z.at(n) = (mu - md) / (2.0 * h);
    }
    return MartingaleRepr{std::move(z)};
}

SkorokhodPair skorokhod(const std::vector<double>& lambda) {
    if (lambda.empty() || lambda.front() != 0.0) {
        throw std::invalid_argument("reflection input must start at 0");
    }
    SkorokhodPair out;
    out.eta.resize(lambda.size());
    out.kappa.resize(lambda.size());
    double running = 0.0;
    for (std::size_t t = 0; t < lambda.size(); ++t) {
        running = std::max(running, std::max(-lambda[t], 0.0));
        out.kappa[t] = running;
        out.eta[t] = lambda[t] + running;
    }
    return out;
}

ReflectionReport backward_reflection(const TreeProcess& x, const SnellResult& snell,
                                     const DriftControl& mu_star) {
    const PathTree& tree = x.tree();
    if (!(snell.envelope.tree() == tree)) {
        throw std::invalid_argument("obstacle and envelope live on different trees");
    }
    DoobMeyer dm = doob_meyer(snell.envelope, mu_star);
    ReflectionReport report{0.0, std::move(dm), mu_star, {}};
    report.reversed_pairs.reserve(tree.leaf_count());

    for (std::uint32_t leaf = 0; leaf < tree.leaf_count(); ++leaf) {
        int stop = snell.horizon.mark_level_on_path(leaf);
        auto node_at_step = [&](int j) {
            return NodeId{j, leaf >> (tree.depth() - j)};
        };
        // Reversed-time distance of the running martingale gap to its
        // value at the path's horizon.
        std::vector<double> lambda(static_cast<std::size_t>(stop) + 1);
        NodeId end = node_at_step(stop);
        double gap_end = report.decomposition.martingale.at(end) - x.at(end);
        for (int s = 0; s <= stop; ++s) {
            NodeId n = node_at_step(stop - s);
            lambda[static_cast<std::size_t>(s)] =
                (report.decomposition.martingale.at(n) - x.at(n)) - gap_end;
        }
        SkorokhodPair pair = skorokhod(lambda);
        double a_end = report.decomposition.compensator.at(end);
        for (int j = 0; j <= stop; ++j) {
            double kbar = pair.kappa[static_cast<std::size_t>(stop - j)];
            double expected = a_end - report.decomposition.compensator.at(node_at_step(j));
            report.max_deviation =
                std::max(report.max_deviation, std::abs(kbar - expected));
        }
        report.reversed_pairs.push_back(std::move(pair));
    }
    return report;
}

}  // namespace ppde
