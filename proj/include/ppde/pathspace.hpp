#pragma once

// Discrete path space on a non-recombining binary scenario tree: node
// addressing, path extraction, the forward (Dupire) and backward
// pseudo-distances, modulus of continuity, concatenation, process
// shifting and hitting times.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace ppde {

// Tree node: level k (0 = root) and the chronological increment bits,
// most significant bit first. Bit 1 = up step (+h), bit 0 = down (-h).
struct NodeId {
    int level = 0;
    std::uint32_t bits = 0;

    friend bool operator==(const NodeId&, const NodeId&) = default;
};

// Complete binary tree of depth N over the time grid {0, dt, ..., N*dt}.
// Spatial increments are +-h with h = sqrt(dt), so the path value at a
// node is h times the signed sum of its increment bits; the root path
// starts at the origin.
class PathTree {
  public:
    static constexpr int kMaxDepth = 14;

    PathTree(int depth, double dt, int dim = 1);

    int depth() const { return depth_; }
    double dt() const { return dt_; }
    int dim() const { return dim_; }
    double step() const { return step_; }        // h = sqrt(dt)
    double horizon() const { return depth_ * dt_; }

    std::size_t node_count() const { return (std::size_t{2} << depth_) - 1; }
    std::size_t leaf_count() const { return std::size_t{1} << depth_; }

    std::size_t index(NodeId n) const;
    NodeId node_at(std::size_t index) const;
    bool is_leaf(NodeId n) const { return n.level == depth_; }
    NodeId child(NodeId n, int up) const;         // up in {0,1}
    NodeId parent(NodeId n) const;
    NodeId leaf(std::uint32_t leaf_bits) const { return {depth_, leaf_bits}; }

    double time_of(NodeId n) const { return n.level * dt_; }
    // Path value at the node's own time.
    double value_of(NodeId n) const;
    // Path value at grid step j <= level along the node's root path.
    double value_at(NodeId n, int j) const;
    // The stopped path (omega_0, ..., omega_t), length level+1.
    std::vector<double> stopped_path(NodeId n) const;

    bool same_grid(const PathTree& other) const;
    bool operator==(const PathTree& other) const;

    // Node address "level:bitstring", e.g. "3:101" (leftmost = first step,
    // '1' = up). The root is "0:".
    NodeId parse_point(std::string_view text) const;
    std::string format_point(NodeId n) const;

    nlohmann::json to_json() const;
    static PathTree from_json(const nlohmann::json& j);

  private:
    int depth_;
    double dt_;
    int dim_;
    double step_;
};

// A real value per tree node; the discrete adapted process.
class TreeProcess {
  public:
    explicit TreeProcess(const PathTree& tree, double fill = 0.0);

    const PathTree& tree() const { return tree_; }
    double& at(NodeId n) { return values_[tree_.index(n)]; }
    double at(NodeId n) const { return values_[tree_.index(n)]; }
    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }
    std::size_t size() const { return values_.size(); }

    double root() const { return values_[0]; }
    double sup_norm() const;
    bool all_finite() const;

    std::vector<double> leaf_values() const;

  private:
    PathTree tree_;
    std::vector<double> values_;
};

// Builds a process from a node function.
template <typename Fn>
TreeProcess make_process(const PathTree& tree, Fn&& fn) {
    TreeProcess out(tree);
    for (std::size_t i = 0; i < tree.node_count(); ++i) {
        out[i] = fn(tree, tree.node_at(i));
    }
    return out;
}

// A set of nodes met exactly once by every root-to-leaf path; the
// discrete stopping time. Marks at level >= 1 when the region stands for
// a strictly positive stopping time.
class StoppingRegion {
  public:
    explicit StoppingRegion(const PathTree& tree);

    static StoppingRegion at_level(const PathTree& tree, int level);
    static StoppingRegion leaves(const PathTree& tree) {
        return at_level(tree, tree.depth());
    }

    const PathTree& tree() const { return tree_; }
    bool marked(NodeId n) const { return marks_[tree_.index(n)] != 0; }
    void set(NodeId n, bool on = true) { marks_[tree_.index(n)] = on ? 1 : 0; }

    // Antichain + covering: every root-to-leaf path has exactly one mark.
    bool is_valid() const;
    void require_valid() const;

    int min_marked_level() const;
    // Level of the first mark on the root path of the given leaf bits.
    int mark_level_on_path(std::uint32_t leaf_bits) const;
    NodeId mark_on_path(std::uint32_t leaf_bits) const;
    // True when no strict ancestor of `at` is marked, so the region is a
    // stopping rule for the subtree rooted at `at`.
    bool dominates(NodeId at) const;

    std::size_t mark_count() const;

  private:
    PathTree tree_;
    std::vector<std::uint8_t> marks_;
};

// A path frozen at its own time: the grid spacing plus the values
// (omega_0, ..., omega_t). Distances are defined on these, so arbitrary
// grid paths (not only tree paths) can be compared.
struct StoppedPath {
    double dt = 1.0;
    std::vector<double> values;

    double time() const { return dt * static_cast<double>(values.size() - 1); }
    // omega_{t ^ s} for grid step j >= 0 (frozen after the path's time).
    double frozen(std::size_t j) const {
        return j < values.size() ? values[j] : values.back();
    }
};

StoppedPath stopped_path_of(const PathTree& tree, NodeId n);

// |t - t'| + sup_s |omega_{t^s} - omega'_{t'^s}|, both paths frozen after
// their own time. Throws on mismatched grids.
double dupire_distance(const StoppedPath& a, const StoppedPath& b);
double dupire_distance(const PathTree& ta, NodeId a, const PathTree& tb, NodeId b);
inline double dupire_distance(const PathTree& t, NodeId a, NodeId b) {
    return dupire_distance(t, a, t, b);
}

// |t - t'| + sup_{s>=0} |omega_{(t-s)v0} - omega'_{(t'-s)v0}|: the paths
// aligned at their right endpoints.
double backward_distance(const StoppedPath& a, const StoppedPath& b);
double backward_distance(const PathTree& ta, NodeId a, const PathTree& tb, NodeId b);
inline double backward_distance(const PathTree& t, NodeId a, NodeId b) {
    return backward_distance(t, a, t, b);
}

// sup |omega_{t^s} - omega_{t^s'}| over grid pairs with |s - s'| <= delta.
double path_modulus(const StoppedPath& a, double delta);
double path_modulus(const PathTree& tree, NodeId n, double delta);

// (omega x_t omega')_s: agrees with the prefix on [0, t], then continues
// as omega_t + tail_{s-t}. The tail starts at 0.
StoppedPath concat(const StoppedPath& prefix, const StoppedPath& tail);

// The shifted process X^{t,omega} on the subtree rooted at `at`:
// value at subtree node (j, tail) = X(level+j, bits|tail).
TreeProcess shift_process(const TreeProcess& x, NodeId at);

// Open interval around the origin; the exit set for hitting times.
struct Interval {
    double lo;
    double hi;
    bool contains(double v) const { return lo < v && v < hi; }
};

// First node per path with time >= s or path value outside the open box.
// Requires 0 < s <= T and a box containing the origin, so that the root
// is never marked and the region is a strictly positive stopping time.
StoppingRegion hitting_time(const PathTree& tree, double s, Interval box);

// Stop at whichever of the two rules fires first along each path.
StoppingRegion earliest_of(const StoppingRegion& a, const StoppingRegion& b);

// The rule seen from `at`: per subtree path, the first original mark.
// Requires that no strict ancestor of `at` is marked.
StoppingRegion shift_region(const StoppingRegion& region, NodeId at);

}  // namespace ppde
