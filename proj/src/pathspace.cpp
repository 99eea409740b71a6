#include "ppde/pathspace.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace ppde {

namespace {

void check_grid(const PathTree& a, const PathTree& b) {
    if (!a.same_grid(b)) {
        throw std::invalid_argument("grid mismatch: trees have different dt");
    }
}

void check_grid(const StoppedPath& a, const StoppedPath& b) {
    if (a.dt != b.dt) {
        throw std::invalid_argument("grid mismatch: paths have different dt");
    }
}

}  // namespace

PathTree::PathTree(int depth, double dt, int dim)
    : depth_(depth), dt_(dt), dim_(dim), step_(std::sqrt(dt)) {
    if (depth < 1 || depth > kMaxDepth) {
        throw std::invalid_argument("tree depth must be in [1, " +
                                    std::to_string(kMaxDepth) + "]");
    }
    if (!(dt > 0.0)) {
        throw std::invalid_argument("dt must be positive");
    }
    if (dim != 1) {
        throw std::invalid_argument("only dim = 1 is supported");
    }
}

std::size_t PathTree::index(NodeId n) const {
    return (std::size_t{1} << n.level) - 1 + n.bits;
}

NodeId PathTree::node_at(std::size_t index) const {
    int level = std::bit_width(index + 1) - 1;
    return {level, static_cast<std::uint32_t>(index + 1 - (std::size_t{1} << level))};
}

NodeId PathTree::child(NodeId n, int up) const {
    return {n.level + 1, (n.bits << 1) | static_cast<std::uint32_t>(up & 1)};
}

NodeId PathTree::parent(NodeId n) const {
    return {n.level - 1, n.bits >> 1};
}

double PathTree::value_of(NodeId n) const {
    return value_at(n, n.level);
}

double PathTree::value_at(NodeId n, int j) const {
    std::uint32_t prefix = n.bits >> (n.level - j);
    int ups = std::popcount(prefix);
    return step_ * static_cast<double>(2 * ups - j);
}

std::vector<double> PathTree::stopped_path(NodeId n) const {
    std::vector<double> out(static_cast<std::size_t>(n.level) + 1);
    for (int j = 0; j <= n.level; ++j) {
        out[static_cast<std::size_t>(j)] = value_at(n, j);
    }
    return out;
}

bool PathTree::same_grid(const PathTree& other) const {
    return dt_ == other.dt_ && dim_ == other.dim_;
}

bool PathTree::operator==(const PathTree& other) const {
    return depth_ == other.depth_ && dt_ == other.dt_ && dim_ == other.dim_;
}

NodeId PathTree::parse_point(std::string_view text) const {
    auto colon = text.find(':');
    if (colon == std::string_view::npos) {
        throw std::invalid_argument("node address must be 'level:bits'");
    }
    int level = 0;
    try {
        level = std::stoi(std::string(text.substr(0, colon)));
    } catch (const std::exception&) {
        throw std::invalid_argument("bad level in node address");
    }
    std::string_view bits = text.substr(colon + 1);
    if (level < 0 || level > depth_ ||
        bits.size() != static_cast<std::size_t>(level)) {
        throw std::invalid_argument("node address out of range for tree");
    }
    std::uint32_t b = 0;
    for (char c : bits) {
        if (c != '0' && c != '1') {
            throw std::invalid_argument("node bits must be 0/1");
        }
        b = (b << 1) | static_cast<std::uint32_t>(c - '0');
    }
    return {level, b};
}

std::string PathTree::format_point(NodeId n) const {
    std::string out = std::to_string(n.level) + ":";
    for (int j = n.level - 1; j >= 0; --j) {
        out += ((n.bits >> j) & 1u) ? '1' : '0';
    }
    return out;
}

nlohmann::json PathTree::to_json() const {
    return {{"depth", depth_}, {"dt", dt_}, {"dim", dim_}};
}

PathTree PathTree::from_json(const nlohmann::json& j) {
    return PathTree(j.at("depth").get<int>(), j.at("dt").get<double>(),
                    j.value("dim", 1));
}

TreeProcess::TreeProcess(const PathTree& tree, double fill)
    : tree_(tree), values_(tree.node_count(), fill) {}

double TreeProcess::sup_norm() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

bool TreeProcess::all_finite() const {
    for (double v : values_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::vector<double> TreeProcess::leaf_values() const {
    std::vector<double> out(tree_.leaf_count());
    for (std::uint32_t b = 0; b < out.size(); ++b) {
        out[b] = at(tree_.leaf(b));
    }
    return out;
}

StoppingRegion::StoppingRegion(const PathTree& tree)
    : tree_(tree), marks_(tree.node_count(), 0) {}

StoppingRegion StoppingRegion::at_level(const PathTree& tree, int level) {
    if (level < 0 || level > tree.depth()) {
        throw std::invalid_argument("stopping level out of range");
    }
    StoppingRegion r(tree);
    for (std::uint32_t b = 0; b < (1u << level); ++b) {
        r.set({level, b});
    }
    return r;
}

bool StoppingRegion::is_valid() const {
    for (std::uint32_t leaf = 0; leaf < tree_.leaf_count(); ++leaf) {
        int hits = 0;
        for (int k = 0; k <= tree_.depth(); ++k) {
            if (marked({k, leaf >> (tree_.depth() - k)})) ++hits;
        }
        if (hits != 1) return false;
    }
    return true;
}

void StoppingRegion::require_valid() const {
    if (!is_valid()) {
        throw std::invalid_argument(
            "invalid stopping region: needs exactly one mark per path");
    }
}

int StoppingRegion::min_marked_level() const {
    for (int k = 0; k <= tree_.depth(); ++k) {
        for (std::uint32_t b = 0; b < (1u << k); ++b) {
            if (marked({k, b})) return k;
        }
    }
    return tree_.depth() + 1;
}

int StoppingRegion::mark_level_on_path(std::uint32_t leaf_bits) const {
    for (int k = 0; k <= tree_.depth(); ++k) {
        if (marked({k, leaf_bits >> (tree_.depth() - k)})) return k;
    }
    throw std::logic_error("no mark on path: region is not covering");
}

NodeId StoppingRegion::mark_on_path(std::uint32_t leaf_bits) const {
    int k = mark_level_on_path(leaf_bits);
    return {k, leaf_bits >> (tree_.depth() - k)};
}

bool StoppingRegion::dominates(NodeId at) const {
    for (int k = 0; k < at.level; ++k) {
        if (marked({k, at.bits >> (at.level - k)})) return false;
    }
    return true;
}

std::size_t StoppingRegion::mark_count() const {
    std::size_t n = 0;
    for (auto m : marks_) n += m;
    return n;
}

StoppedPath stopped_path_of(const PathTree& tree, NodeId n) {
    return {tree.dt(), tree.stopped_path(n)};
}

double dupire_distance(const StoppedPath& a, const StoppedPath& b) {
    check_grid(a, b);
    double sup = 0.0;
    std::size_t steps = std::max(a.values.size(), b.values.size());
    for (std::size_t j = 0; j < steps; ++j) {
        sup = std::max(sup, std::abs(a.frozen(j) - b.frozen(j)));
    }
    return std::abs(a.time() - b.time()) + sup;
}

double dupire_distance(const PathTree& ta, NodeId a, const PathTree& tb, NodeId b) {
    check_grid(ta, tb);
    return dupire_distance(stopped_path_of(ta, a), stopped_path_of(tb, b));
}

double backward_distance(const StoppedPath& a, const StoppedPath& b) {
    check_grid(a, b);
    double sup = 0.0;
    std::size_t steps = std::max(a.values.size(), b.values.size());
    auto back = [](const StoppedPath& p, std::size_t s) {
        std::size_t last = p.values.size() - 1;
        return p.values[s <= last ? last - s : 0];
    };
    for (std::size_t s = 0; s < steps; ++s) {
        sup = std::max(sup, std::abs(back(a, s) - back(b, s)));
    }
    return std::abs(a.time() - b.time()) + sup;
}

double backward_distance(const PathTree& ta, NodeId a, const PathTree& tb, NodeId b) {
    check_grid(ta, tb);
    return backward_distance(stopped_path_of(ta, a), stopped_path_of(tb, b));
}

double path_modulus(const StoppedPath& a, double delta) {
    if (delta < 0.0) {
        throw std::invalid_argument("modulus window must be nonnegative");
    }
    double sup = 0.0;
    std::size_t n = a.values.size();
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = j + 1; k < n; ++k) {
            if (static_cast<double>(k - j) * a.dt > delta) break;
            sup = std::max(sup, std::abs(a.values[k] - a.values[j]));
        }
    }
    return sup;
}

double path_modulus(const PathTree& tree, NodeId n, double delta) {
    return path_modulus(stopped_path_of(tree, n), delta);
}

StoppedPath concat(const StoppedPath& prefix, const StoppedPath& tail) {
    check_grid(prefix, tail);
    if (prefix.values.empty() || tail.values.empty()) {
        throw std::invalid_argument("concat: empty path segment");
    }
    if (tail.values.front() != 0.0) {
        throw std::invalid_argument("concat: tail must start at 0");
    }
    StoppedPath out{prefix.dt, prefix.values};
    double base = prefix.values.back();
    for (std::size_t s = 1; s < tail.values.size(); ++s) {
        out.values.push_back(base + tail.values[s]);
    }
    return out;
}

TreeProcess shift_process(const TreeProcess& x, NodeId at) {
    const PathTree& tree = x.tree();
    if (at.level == 0) return x;
    PathTree sub(tree.depth() - at.level, tree.dt(), tree.dim());
    TreeProcess out(sub);
    for (std::size_t i = 0; i < sub.node_count(); ++i) {
        NodeId n = sub.node_at(i);
        out[i] = x.at({at.level + n.level, (at.bits << n.level) | n.bits});
    }
    return out;
}

StoppingRegion earliest_of(const StoppingRegion& a, const StoppingRegion& b) {
    const PathTree& tree = a.tree();
    if (!(b.tree() == tree)) {
        throw std::invalid_argument("stopping rules live on different trees");
    }
    StoppingRegion out(tree);
    for (std::uint32_t leaf = 0; leaf < tree.leaf_count(); ++leaf) {
        for (int k = 0; k <= tree.depth(); ++k) {
            NodeId n{k, leaf >> (tree.depth() - k)};
            if (a.marked(n) || b.marked(n)) {
                out.set(n);
                break;
            }
        }
    }
    return out;
}

StoppingRegion shift_region(const StoppingRegion& region, NodeId at) {
    const PathTree& tree = region.tree();
    if (!region.dominates(at)) {
        throw std::invalid_argument("region already fired above the shift node");
    }
    PathTree sub(tree.depth() - at.level, tree.dt(), tree.dim());
    StoppingRegion out(sub);
    for (std::uint32_t leaf = 0; leaf < sub.leaf_count(); ++leaf) {
        for (int k = 0; k <= sub.depth(); ++k) {
            NodeId n{k, leaf >> (sub.depth() - k)};
            NodeId glued{at.level + k, (at.bits << k) | n.bits};
            if (region.marked(glued)) {
                out.set(n);
                break;
            }
        }
    }
    return out;
}

StoppingRegion hitting_time(const PathTree& tree, double s, Interval box) {
    if (!(s > 0.0) || s > tree.horizon()) {
        throw std::invalid_argument("hitting time needs 0 < s <= T");
    }
    if (!box.contains(0.0)) {
        throw std::invalid_argument(
            "hitting box must contain the origin (the region would mark the root)");
    }
    StoppingRegion region(tree);
    for (std::uint32_t leaf = 0; leaf < tree.leaf_count(); ++leaf) {
        for (int k = 0; k <= tree.depth(); ++k) {
            NodeId n{k, leaf >> (tree.depth() - k)};
            if (tree.time_of(n) >= s || !box.contains(tree.value_of(n))) {
                region.set(n);
                break;
            }
        }
    }
    return region;
}

}  // namespace ppde
