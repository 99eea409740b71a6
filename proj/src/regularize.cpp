#include "ppde/regularize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace ppde {

namespace {

std::vector<StoppedPath> all_paths(const PathTree& tree) {
    std::vector<StoppedPath> out;
    out.reserve(tree.node_count());
    for (std::size_t i = 0; i < tree.node_count(); ++i) {
        out.push_back(stopped_path_of(tree, tree.node_at(i)));
    }
    return out;
}

}  // namespace

ConvolutionResult sup_convolution(const TreeProcess& u, double n) {
    if (!(n > 0.0)) {
        throw std::invalid_argument("convolution weight must be positive");
    }
    const PathTree& tree = u.tree();
    double m = u.sup_norm();
    auto paths = all_paths(tree);
    TreeProcess out(tree);
    for (std::size_t i = 0; i < tree.node_count(); ++i) {
        double best = u[i];  // theta' = theta contributes u(theta)
        double ti = paths[i].time();
        for (std::size_t j = 0; j < tree.node_count(); ++j) {
            // bdist >= |t - t'|, so this candidate cannot win.
            if (u[j] - n * std::abs(paths[j].time() - ti) <= best) continue;
            best = std::max(best, u[j] - n * backward_distance(paths[i], paths[j]));
        }
        out[i] = best;
    }
    return ConvolutionResult{std::move(out), n, m};
}

ConvolutionResult inf_convolution(const TreeProcess& v, double n) {
    TreeProcess neg(v.tree());
    for (std::size_t i = 0; i < v.size(); ++i) neg[i] = -v[i];
    ConvolutionResult r = sup_convolution(neg, n);
    for (std::size_t i = 0; i < r.regularized.size(); ++i) {
        r.regularized[i] = -r.regularized[i];
    }
    return r;
}

double convolution_identity_threshold(const TreeProcess& u) {
    const PathTree& tree = u.tree();
    auto paths = all_paths(tree);
    double min_dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < tree.node_count(); ++i) {
        for (std::size_t j = i + 1; j < tree.node_count(); ++j) {
            double d = backward_distance(paths[i], paths[j]);
            if (d > 0.0) min_dist = std::min(min_dist, d);
        }
    }
    return 2.0 * u.sup_norm() / min_dist;
}

namespace {

TreeProcess ball_extreme(const TreeProcess& w, double radius, bool take_max) {
    if (radius < 0.0) {
        throw std::invalid_argument("envelope radius must be nonnegative");
    }
    const PathTree& tree = w.tree();
    auto paths = all_paths(tree);
    TreeProcess out(tree);
    for (std::size_t i = 0; i < tree.node_count(); ++i) {
        double ext = w[i];
        for (std::size_t j = 0; j < tree.node_count(); ++j) {
            if (dupire_distance(paths[i], paths[j]) > radius) continue;
            ext = take_max ? std::max(ext, w[j]) : std::min(ext, w[j]);
        }
        out[i] = ext;
    }
    return out;
}

}  // namespace

TreeProcess usc_envelope(const TreeProcess& w, double radius) {
    return ball_extreme(w, radius, true);
}

TreeProcess lsc_envelope(const TreeProcess& w, double radius) {
    return ball_extreme(w, radius, false);
}

double epsilon_n(const StoppedPath& path, double n, double m_bound) {
    if (!(n > 0.0) || m_bound < 0.0) {
        throw std::invalid_argument("epsilon_n needs n > 0 and M >= 0");
    }
    return (2.0 * m_bound + 1.0) / n + path_modulus(path, 2.0 * m_bound / n);
}

double epsilon_n(const PathTree& tree, NodeId node, double n, double m_bound) {
    return epsilon_n(stopped_path_of(tree, node), n, m_bound);
}

}  // namespace ppde
