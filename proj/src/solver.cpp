#include "ppde/solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ppde/regularize.hpp"

namespace ppde {

TreeProcess ppde_solve(const Generator& gen, const TerminalCondition& xi,
                       const PathTree& tree) {
    require_compatible(gen.bound, tree);
    if (gen.bound.L * tree.dt() >= 1.0) {
        throw std::invalid_argument("explicit scheme needs the contraction dt*L < 1");
    }
    if (xi.values.size() != tree.leaf_count()) {
        throw std::invalid_argument("terminal condition must cover every leaf");
    }
    double h = tree.step();
    double dt = tree.dt();
    TreeProcess u(tree);
    for (std::uint32_t b = 0; b < tree.leaf_count(); ++b) {
        u.at(tree.leaf(b)) = xi.values[b];
    }
    for (int level = tree.depth() - 1; level >= 0; --level) {
        for (std::uint32_t b = 0; b < (1u << level); ++b) {
            NodeId n{level, b};
            double up = u.at(tree.child(n, 1));
            double down = u.at(tree.child(n, 0));
            double mean = 0.5 * (up + down);
            double slope = (up - down) / (2.0 * h);
            u.at(n) = mean + dt * gen.eval(tree, n, mean, slope);
        }
    }
    if (!u.all_finite()) {
        throw std::runtime_error("scheme produced non-finite values");
    }
    return u;
}

SubsolutionFamily build_subsolution_family(const Generator& gen,
                                           const TerminalCondition& xi,
                                           const PathTree& tree,
                                           const FamilySpec& family_spec,
                                           const JetSamplingSpec& jet_spec,
                                           double tol, int threads) {
    TreeProcess oracle = ppde_solve(gen, xi, tree);
    SubsolutionFamily family{{}, {}, oracle};

    auto consider = [&](TreeProcess process, std::string provenance) {
        for (std::size_t i = 0; i < process.size(); ++i) {
            if (process[i] > oracle[i] + tol) {
                family.dropped.push_back(provenance + ": exceeds the oracle bound");
                return;
            }
        }
        CheckReport report =
            check_subsolution(process, gen, jet_spec, tol, threads);
        if (!report.passed) {
            family.dropped.push_back(provenance + ": fails the subsolution check");
            return;
        }
        family.members.push_back({std::move(process), std::move(provenance)});
    };

    double horizon = tree.horizon();
    for (double shift : family_spec.shifts) {
        TreeProcess member(tree);
        for (std::size_t i = 0; i < member.size(); ++i) {
            NodeId n = tree.node_at(i);
            member[i] = oracle[i] - shift * (horizon - tree.time_of(n));
        }
        consider(std::move(member), "shift(" + std::to_string(shift) + ")");
    }
    for (const EtaSpec& spec : family_spec.etas) {
        StoppingRegion region = hitting_horizon(tree, spec.horizon);
        TreeProcess eta =
            special_solution(oracle, region, spec.alpha, spec.beta, gen.bound);
        consider(std::move(eta), "eta(a=" + std::to_string(spec.alpha) +
                                     ",b=" + std::to_string(spec.beta) + ")");
    }
    return family;
}

PerronResult perron_construct(const Generator& gen, const SubsolutionFamily& family) {
    (void)gen;
    if (family.members.empty()) {
        throw std::invalid_argument("subsolution family is empty");
    }
    const PathTree& tree = family.members.front().process.tree();
    PerronResult out{TreeProcess(tree), std::vector<int>(tree.node_count(), 0)};
    for (std::size_t i = 0; i < tree.node_count(); ++i) {
        double best = family.members.front().process[i];
        int arg = 0;
        for (std::size_t k = 1; k < family.members.size(); ++k) {
            double v = family.members[k].process[i];
            if (v > best) {
                best = v;
                arg = static_cast<int>(k);
            }
        }
        out.value[i] = best;
        out.argmax[i] = arg;
    }
    return out;
}

ComparisonReport comparison_check(const TreeProcess& u, const TreeProcess& v,
                                  double tol) {
    const PathTree& tree = u.tree();
    if (!(v.tree() == tree)) {
        throw std::invalid_argument("processes live on different trees");
    }
    ComparisonReport report;
    report.tol = tol;
    for (std::uint32_t b = 0; b < tree.leaf_count(); ++b) {
        NodeId leaf = tree.leaf(b);
        double excess = u.at(leaf) - v.at(leaf);
        if (excess > 0.0) {
            report.terminal_ordered = false;
            report.terminal_violations.push_back({leaf, excess});
        }
    }
    for (std::size_t i = 0; i < tree.node_count(); ++i) {
        double excess = u[i] - v[i];
        report.max_excess = std::max(report.max_excess, excess);
        if (excess > tol) {
            report.violations.push_back({tree.node_at(i), excess});
        }
    }
    report.passed = report.terminal_ordered && report.violations.empty();
    return report;
}

MaxPrincipleReport pucci_max_principle(const TreeProcess& u, DriftBound bound,
                                       double conv_n, double conv_m,
                                       const JetSamplingSpec& spec, double tol,
                                       int threads) {
    const PathTree& tree = u.tree();
    double L = bound.L;
    Generator extremal;
    extremal.name = "extremal";
    extremal.bound = bound;
    extremal.monotone_in_y = true;
    extremal.eval = [L](const PathTree&, NodeId, double y, double z) {
        return L * std::max(y, 0.0) + L * std::abs(z);
    };
    extremal.rho = [](const PathTree&, NodeId, double, double) { return 0.0; };
    extremal.f0 = [](const PathTree&, NodeId) { return 0.0; };

    bool terminal_ok = true;
    for (std::uint32_t b = 0; b < tree.leaf_count(); ++b) {
        if (u.at(tree.leaf(b)) > 0.0) terminal_ok = false;
    }
    CheckReport subsolution = check_subsolution(u, extremal, spec, tol, threads);

    // Comparator: controlled value of the regularization error terms. The
    // error radius constant mirrors the (2M+1)/n numerator of eps_n.
    ConvolutionResult un = sup_convolution(u, conv_n);
    ConvolutionResult um = sup_convolution(u, conv_m);
    double big = 2.0 * u.sup_norm() + 1.0;
    TreeProcess running(tree);
    for (std::size_t i = 0; i < tree.node_count(); ++i) {
        NodeId n = tree.node_at(i);
        double rho_nm =
            big * conv_m *
            (1.0 / conv_n + path_modulus(tree, n, big / conv_n));
        running[i] =
            rho_nm + L * std::max(um.regularized[i] - un.regularized[i], 0.0);
    }
    std::vector<double> terminal(tree.leaf_count());
    for (std::uint32_t b = 0; b < tree.leaf_count(); ++b) {
        terminal[b] = std::max(un.regularized.at(tree.leaf(b)), 0.0);
    }
    TreeProcess comparator = controlled_value(running, terminal, L, bound);

    double max_over_comparator = u[0] - comparator[0];
    double max_value = u[0];
    for (std::size_t i = 0; i < tree.node_count(); ++i) {
        max_over_comparator = std::max(max_over_comparator, u[i] - comparator[i]);
        max_value = std::max(max_value, u[i]);
    }
    bool dominated = max_over_comparator <= tol;
    bool nonpositive = max_value <= tol;
    bool passed = terminal_ok && subsolution.passed && dominated && nonpositive;
    return MaxPrincipleReport{terminal_ok,  std::move(subsolution),
                              dominated,    max_over_comparator,
                              nonpositive,  max_value,
                              passed,       std::move(comparator)};
}

CheckReport difference_subsolution_check(const TreeProcess& u, const TreeProcess& v,
                                         const Generator& f0,
                                         const TreeProcess& delta,
                                         const JetSamplingSpec& spec, double tol,
                                         std::optional<double> conv_n, int threads) {
    const PathTree& tree = u.tree();
    if (!(v.tree() == tree) || !(delta.tree() == tree)) {
        throw std::invalid_argument("processes live on different trees");
    }
    TreeProcess w(tree);
    for (std::size_t i = 0; i < tree.node_count(); ++i) w[i] = u[i] - v[i];

    double L = f0.bound.L;
    double m_bound = std::max(u.sup_norm(), v.sup_norm());
    TreeProcess slack(tree, 0.0);
    if (conv_n) {
        for (std::size_t i = 0; i < tree.node_count(); ++i) {
            NodeId n = tree.node_at(i);
            double eps = epsilon_n(tree, n, *conv_n, m_bound);
            slack[i] = 2.0 * f0.rho(tree, n, eps, w[i]);
        }
    }

    Generator dominated;
    dominated.name = "difference(" + f0.name + ")";
    dominated.bound = f0.bound;
    dominated.monotone_in_y = true;
    dominated.eval = [L, &delta, &slack](const PathTree& t, NodeId n, double,
                                         double z) {
        return L * std::abs(z) + delta.at(n) + slack.at(n);
    };
    dominated.rho = [](const PathTree&, NodeId, double, double) { return 0.0; };
    dominated.f0 = [&delta, &slack](const PathTree&, NodeId n) {
        return std::abs(delta.at(n)) + slack.at(n);
    };
    return check_subsolution(w, dominated, spec, tol, threads);
}

double default_tolerance(const PathTree& tree, DriftBound bound, double scale) {
    return 5.0 * tree.dt() * (1.0 + bound.L) * (1.0 + scale);
}

}  // namespace ppde
