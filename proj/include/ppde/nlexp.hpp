#pragma once

// Drift-controlled measure family and the induced sublinear expectations.
// A drift mu with |mu| <= L tilts the one-step up-probability to
// p(mu) = (1 + mu*h)/2; the upper expectation takes the per-node sup over
// admissible drifts, the lower expectation the inf. The per-node
// objective is affine in mu, so comparing mu = +-L is exact (bang-bang).

#include <cstdint>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ppde/pathspace.hpp"

namespace ppde {

// Drift magnitude bound L >= 0. A tree is compatible when L*h <= 1, so
// that tilted probabilities stay in [0, 1]. Violations are rejected, not
// clamped: clamping would change the measure family.
struct DriftBound {
    double L = 0.0;
};

void require_compatible(DriftBound bound, const PathTree& tree);

// One drift value in [-L, L] per non-leaf node; selects one measure from
// the family.
class DriftControl {
  public:
    DriftControl(const PathTree& tree, DriftBound bound, double fill = 0.0);

    const PathTree& tree() const { return tree_; }
    DriftBound bound() const { return bound_; }
    double& at(NodeId n) { return mu_[tree_.index(n)]; }
    double at(NodeId n) const { return mu_[tree_.index(n)]; }

    nlohmann::json to_json() const;

  private:
    PathTree tree_;
    DriftBound bound_;
    std::vector<double> mu_;     // indexed like interior nodes
};

// p(mu)*v_up + (1-p(mu))*v_down with p(mu) = (1 + mu*h)/2, written as
// mean + tilt so that sup/inf below share the exact same arithmetic.
inline double one_step_expect(double v_up, double v_down, double mu, double h) {
    return 0.5 * (v_up + v_down) + (0.5 * mu * h) * (v_up - v_down);
}

// max over mu in [-L, L] of the one-step tilted mean; equals
// (v_up+v_down)/2 + (L*h/2)*|v_up - v_down|, attained at mu = +-L.
double one_step_sup(double v_up, double v_down, DriftBound bound, double dt);
double one_step_inf(double v_up, double v_down, DriftBound bound, double dt);

// sup over the measure family of E[X stopped at `upto` | node `at`],
// computed by backward induction from the stopping region.
double sup_expectation(const TreeProcess& x, NodeId at, const StoppingRegion& upto,
                       DriftBound bound);
double inf_expectation(const TreeProcess& x, NodeId at, const StoppingRegion& upto,
                       DriftBound bound);

// Full table of conditional upper expectations: equals the stopped payoff
// on and below the region, the one-step optimum of the children above it.
TreeProcess conditional_sup(const TreeProcess& x, const StoppingRegion& upto,
                            DriftBound bound);
TreeProcess conditional_inf(const TreeProcess& x, const StoppingRegion& upto,
                            DriftBound bound);

// The argmax drift control (+L on ties and on nodes the DP never visits).
DriftControl worst_drift(const TreeProcess& x, const StoppingRegion& upto,
                         DriftBound bound);

// Plain tilted expectation under a fixed control, same backward recursion.
double tilted_expectation(const TreeProcess& x, NodeId at, const StoppingRegion& upto,
                          const DriftControl& control);
TreeProcess conditional_tilted(const TreeProcess& x, const StoppingRegion& upto,
                               const DriftControl& control);

// Value of the controlled running-cost problem
//   sup_mu E_mu[ sum_s e^{lambda s} running_s dt + e^{lambda (T-t)} terminal ]
// with the local clock s starting at the evaluation node. `terminal` is
// indexed by leaf bits.
TreeProcess controlled_value(const TreeProcess& running,
                             const std::vector<double>& terminal, double lambda,
                             DriftBound bound);

}  // namespace ppde
