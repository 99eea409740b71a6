#include "ppde/viscosity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "ppde/detail/backward.hpp"
#include "ppde/parallel.hpp"

namespace ppde {

namespace {

constexpr double kFrontierTol = 1e-10;

// Tangency optimal-stopping problem at a node: payoff on the subtree is
//   u(shifted node) - alpha*(local time) - beta*(tail path value),
// stopped at the horizon. Only the active part of the subtree (no
// ancestor-or-self mark) feeds the root continuation value, so the DP
// walks a precomputed schedule instead of the full subtree.
class JetProblem {
  public:
    JetProblem(const TreeProcess& u, NodeId at, double beta,
               const StoppingRegion& horizon, DriftBound bound)
        : sub_(horizon.tree()), h_(sub_.step()), bound_(bound) {
        const PathTree& tree = u.tree();
        if (sub_.depth() != tree.depth() - at.level || !sub_.same_grid(tree)) {
            throw std::invalid_argument("horizon does not live on the subtree");
        }
        horizon.require_valid();
        if (horizon.min_marked_level() < 1) {
            throw std::invalid_argument("jet horizon must be strictly positive");
        }
        require_compatible(bound, sub_);
        immediate_ = u.at(at);

        base_.resize(sub_.node_count());
        time_.resize(sub_.node_count());
        state_.resize(sub_.node_count(), kOutside);
        for (std::size_t i = 0; i < sub_.node_count(); ++i) {
            NodeId n = sub_.node_at(i);
            base_[i] = u.at({at.level + n.level, (at.bits << n.level) | n.bits}) -
                       beta * sub_.value_of(n);
            time_[i] = sub_.time_of(n);
        }
        // Mark actives top-down, then schedule them bottom-up.
        state_[0] = kActive;
        for (std::size_t i = 1; i < sub_.node_count(); ++i) {
            NodeId n = sub_.node_at(i);
            if (state_[sub_.index(sub_.parent(n))] != kActive) continue;
            state_[i] = horizon.marked(n) ? kMarked : kActive;
        }
        for (std::size_t i = sub_.node_count(); i-- > 1;) {
            if (state_[i] != kOutside) schedule_.push_back(i);
        }
        values_.resize(sub_.node_count());
    }

    double immediate() const { return immediate_; }

    // Envelope continuation value at the root (stopping not allowed there).
    double continuation(double alpha) const {
        for (std::size_t i : schedule_) {
            double payoff = base_[i] - alpha * time_[i];
            if (state_[i] == kMarked) {
                values_[i] = payoff;
            } else {
                NodeId n = sub_.node_at(i);
                values_[i] = std::max(payoff, step(n));
            }
        }
        return step(NodeId{0, 0});
    }

    bool passes(double alpha) const { return continuation(alpha) <= immediate_; }

  private:
    enum State : std::uint8_t { kOutside, kActive, kMarked };

    double step(NodeId n) const {
        double vu = values_[sub_.index(sub_.child(n, 1))];
        double vd = values_[sub_.index(sub_.child(n, 0))];
        return std::max(one_step_expect(vu, vd, bound_.L, h_),
                        one_step_expect(vu, vd, -bound_.L, h_));
    }

    PathTree sub_;
    double h_;
    DriftBound bound_;
    double immediate_ = 0.0;
    std::vector<double> base_;
    std::vector<double> time_;
    std::vector<State> state_;
    std::vector<std::size_t> schedule_;
    mutable std::vector<double> values_;
};

// Bracket the admissibility edge and bisect. The predicate is monotone:
// raising alpha only lowers every continuation payoff.
double frontier_of(const JetProblem& problem) {
    double lo, hi;
    if (problem.passes(0.0)) {
        hi = 0.0;
        lo = -1.0;
        while (problem.passes(lo)) {
            hi = lo;
            lo *= 2.0;
            if (lo < -1e18) {
                throw std::runtime_error("jet frontier unbounded from below");
            }
        }
    } else {
        lo = 0.0;
        hi = 1.0;
        while (!problem.passes(hi)) {
            lo = hi;
            hi *= 2.0;
            if (hi > 1e18) return std::numeric_limits<double>::infinity();
        }
    }
    while (hi - lo > kFrontierTol) {
        double mid = 0.5 * (lo + hi);
        (problem.passes(mid) ? hi : lo) = mid;
    }
    return hi;
}

TreeProcess negated(const TreeProcess& u) {
    TreeProcess out(u.tree());
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = -u[i];
    return out;
}

// Exact one-step frontier: stopping after a single step is optimal iff
// alpha >= (one-step sup of u_child -+ beta*h  minus  u) / dt.
double one_step_frontier(const TreeProcess& u, NodeId at, double beta,
                         DriftBound bound) {
    const PathTree& tree = u.tree();
    double h = tree.step();
    double vu = u.at(tree.child(at, 1)) - beta * h;
    double vd = u.at(tree.child(at, 0)) + beta * h;
    double cont = std::max(one_step_expect(vu, vd, bound.L, h),
                           one_step_expect(vu, vd, -bound.L, h));
    return (cont - u.at(at)) / tree.dt();
}

std::vector<double> beta_grid(const TreeProcess& u, const JetSamplingSpec& spec) {
    double half = spec.beta_halfwidth > 0.0 ? spec.beta_halfwidth
                                            : default_beta_halfwidth(u);
    int points = std::max(spec.beta_points, 1);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(points));
    if (points == 1) {
        out.push_back(0.0);
        return out;
    }
    for (int k = 0; k < points; ++k) {
        out.push_back(-half + (2.0 * half) * k / (points - 1));
    }
    return out;
}

struct NodeOutcome {
    double max_margin = -std::numeric_limits<double>::infinity();
    std::size_t checks = 0;
    std::vector<JetViolation> violations;
};

// role: +1 checks subsolutions, -1 supersolutions via the duality
// superjet(u) = -subjet(-u).
CheckReport run_check(const TreeProcess& u, const Generator& gen,
                      const JetSamplingSpec& spec, double tol, int threads,
                      int role) {
    const PathTree& tree = u.tree();
    require_compatible(gen.bound, tree);
    std::vector<double> betas = beta_grid(u, spec);
    TreeProcess mirrored = role > 0 ? u : negated(u);

    std::vector<std::size_t> interior;
    for (std::size_t i = 0; i < tree.node_count(); ++i) {
        if (!tree.is_leaf(tree.node_at(i))) interior.push_back(i);
    }
    std::vector<NodeOutcome> outcomes(interior.size());

    if (spec.localize && !(spec.localize->tree() == tree)) {
        throw std::invalid_argument("localization rule lives on another tree");
    }

    parallel_for(interior.size(), threads, [&](std::size_t slot) {
        NodeId node = tree.node_at(interior[slot]);
        NodeOutcome& out = outcomes[slot];
        if (spec.localize &&
            (!spec.localize->dominates(node) || spec.localize->marked(node))) {
            return;  // the node is on or past the localization boundary
        }
        PathTree sub(tree.depth() - node.level, tree.dt(), tree.dim());

        auto record = [&](double frontier, double beta, const std::string& kind) {
            double edge = role > 0 ? frontier : -frontier;
            double margin = role > 0
                                ? -edge - gen.eval(tree, node, u.at(node), beta)
                                : edge + gen.eval(tree, node, u.at(node), beta);
            out.checks += 1;
            out.max_margin = std::max(out.max_margin, margin);
            if (margin > tol) {
                out.violations.push_back({node, beta, margin, kind});
            }
        };

        std::optional<StoppingRegion> boundary;
        if (spec.localize) boundary = shift_region(*spec.localize, node);

        for (double beta : betas) {
            double mirrored_beta = role > 0 ? beta : -beta;
            record(one_step_frontier(mirrored, node, mirrored_beta, gen.bound), beta,
                   "one-step");
            if (sub.depth() == 1) continue;  // hitting horizons collapse to one-step
            for (const HittingSpec& hit : spec.hitting) {
                StoppingRegion horizon = hitting_horizon(sub, hit);
                if (boundary) horizon = earliest_of(horizon, *boundary);
                JetProblem problem(mirrored, node, mirrored_beta, horizon, gen.bound);
                record(frontier_of(problem), beta,
                       "hit(" + std::to_string(hit.time_steps) + "," +
                           std::to_string(hit.space_steps) + ")");
            }
        }
    });

    CheckReport report;
    report.tol = tol;
    report.max_margin = -std::numeric_limits<double>::infinity();
    for (const NodeOutcome& out : outcomes) {
        report.checks += out.checks;
        report.max_margin = std::max(report.max_margin, out.max_margin);
        report.violations.insert(report.violations.end(), out.violations.begin(),
                                 out.violations.end());
    }
    report.passed = report.violations.empty();
    return report;
}

}  // namespace

GeneratorDiagnostics spot_check_generator(const Generator& gen, const PathTree& tree,
                                          std::uint64_t seed, int samples) {
    std::mt19937_64 rng(seed);
    auto uniform = [&](double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1p-53);
    };
    GeneratorDiagnostics diag;
    for (int s = 0; s < samples; ++s) {
        NodeId n = tree.node_at(rng() % tree.node_count());
        double y1 = uniform(-2.0, 2.0), y2 = uniform(-2.0, 2.0);
        double z1 = uniform(-2.0, 2.0), z2 = uniform(-2.0, 2.0);
        double df = std::abs(gen.eval(tree, n, y1, z1) - gen.eval(tree, n, y2, z2));
        double allowed = gen.bound.L * (std::abs(y1 - y2) + std::abs(z1 - z2));
        diag.lipschitz_excess = std::max(diag.lipschitz_excess, df - allowed);
        if (gen.monotone_in_y) {
            double lo = std::min(y1, y2), hi = std::max(y1, y2);
            if (gen.eval(tree, n, hi, z1) < gen.eval(tree, n, lo, z1) - 1e-12) {
                diag.monotone_ok = false;
            }
        }
    }
    return diag;
}

bool subjet_test(const TreeProcess& u, NodeId at, const JetCandidate& cand,
                 DriftBound bound) {
    JetProblem problem(u, at, cand.beta, cand.horizon, bound);
    return problem.passes(cand.alpha);
}

bool superjet_test(const TreeProcess& u, NodeId at, const JetCandidate& cand,
                   DriftBound bound) {
    JetCandidate mirrored{-cand.alpha, -cand.beta, cand.horizon};
    return subjet_test(negated(u), at, mirrored, bound);
}

double subjet_frontier(const TreeProcess& u, NodeId at, double beta,
                       const StoppingRegion& horizon, DriftBound bound) {
    return frontier_of(JetProblem(u, at, beta, horizon, bound));
}

double superjet_frontier(const TreeProcess& u, NodeId at, double beta,
                         const StoppingRegion& horizon, DriftBound bound) {
    return -subjet_frontier(negated(u), at, -beta, horizon, bound);
}

CheckReport check_subsolution(const TreeProcess& u, const Generator& gen,
                              const JetSamplingSpec& spec, double tol,
                              int threads) {
    return run_check(u, gen, spec, tol, threads, +1);
}

CheckReport check_supersolution(const TreeProcess& u, const Generator& gen,
                                const JetSamplingSpec& spec, double tol,
                                int threads) {
    return run_check(u, gen, spec, tol, threads, -1);
}

TreeProcess special_solution(const TreeProcess& u, const StoppingRegion& horizon,
                             double alpha, double beta, DriftBound bound) {
    const PathTree& tree = u.tree();
    require_compatible(bound, tree);
    double h = tree.step();
    double dt = tree.dt();
    return detail::backward_table(u, horizon, [&](NodeId, double vu, double vd) {
        double a = vu - beta * h;
        double b = vd + beta * h;
        return std::min(one_step_expect(a, b, bound.L, h),
                        one_step_expect(a, b, -bound.L, h)) -
               alpha * dt;
    });
}

SpecialSolutionRepr special_solution_repr(const TreeProcess& u,
                                          const StoppingRegion& horizon,
                                          double alpha, double beta,
                                          DriftBound bound) {
    const PathTree& tree = u.tree();
    TreeProcess eta = special_solution(u, horizon, alpha, beta, bound);
    TreeProcess z(tree, 0.0);
    DriftControl drift(tree, bound, bound.L);
    double h = tree.step();
    for (std::size_t i = 0; i < tree.node_count(); ++i) {
        NodeId n = tree.node_at(i);
        if (tree.is_leaf(n) || !horizon.dominates(n) || horizon.marked(n)) continue;
        double slope =
            (eta.at(tree.child(n, 1)) - eta.at(tree.child(n, 0))) / (2.0 * h);
        z.at(n) = slope;
        drift.at(n) = (slope - beta > 0.0) ? -bound.L : bound.L;
    }
    return SpecialSolutionRepr{std::move(eta), std::move(z), std::move(drift)};
}

std::pair<TreeProcess, Generator> change_variable(const TreeProcess& u,
                                                  const Generator& gen,
                                                  double lambda) {
    if (lambda > 0.0) {
        throw std::invalid_argument("change of variable requires lambda <= 0");
    }
    const PathTree& tree = u.tree();
    TreeProcess transformed(tree);
    for (std::size_t i = 0; i < tree.node_count(); ++i) {
        transformed[i] = std::exp(lambda * tree.time_of(tree.node_at(i))) * u[i];
    }
    Generator out;
    out.name = gen.name + "(tilted)";
    out.bound = gen.bound;  // the z-Lipschitz constant survives the transform
    out.monotone_in_y = gen.monotone_in_y;
    auto inner_eval = gen.eval;
    out.eval = [inner_eval, lambda](const PathTree& t, NodeId n, double y, double z) {
        double scale = std::exp(lambda * t.time_of(n));
        return -lambda * y + scale * inner_eval(t, n, y / scale, z / scale);
    };
    auto inner_rho = gen.rho;
    out.rho = [inner_rho, lambda](const PathTree& t, NodeId n, double x, double y) {
        double scale = std::exp(lambda * t.time_of(n));
        return scale * inner_rho(t, n, x, y / scale);
    };
    auto inner_f0 = gen.f0;
    out.f0 = [inner_f0, lambda](const PathTree& t, NodeId n) {
        return std::exp(lambda * t.time_of(n)) * inner_f0(t, n);
    };
    return {std::move(transformed), std::move(out)};
}

StoppingRegion hitting_horizon(const PathTree& subtree, const HittingSpec& spec) {
    if (!(spec.space_steps > 0.0) || !(spec.time_steps >= 1.0)) {
        throw std::invalid_argument("hitting spec needs time_steps >= 1, space > 0");
    }
    double steps = std::min(spec.time_steps, static_cast<double>(subtree.depth()));
    double width = spec.space_steps * subtree.step();
    return hitting_time(subtree, steps * subtree.dt(), Interval{-width, width});
}

double default_beta_halfwidth(const TreeProcess& u) {
    const PathTree& tree = u.tree();
    double h = tree.step();
    double slope = 0.0;
    for (std::size_t i = 0; i < tree.node_count(); ++i) {
        NodeId n = tree.node_at(i);
        if (tree.is_leaf(n)) continue;
        slope = std::max(slope, std::abs(u.at(tree.child(n, 1)) -
                                         u.at(tree.child(n, 0))) /
                                    (2.0 * h));
    }
    return slope > 0.0 ? 2.0 * slope : 1.0;
}

}  // namespace ppde
