#pragma once

// Backward-induction oracle for the semilinear equation, the
// subsolution-supremum construction, and the comparison / maximum
// principle harnesses built on the jet checkers.

#include <optional>
#include <string>
#include <vector>

#include "ppde/nlexp.hpp"
#include "ppde/pathspace.hpp"
#include "ppde/viscosity.hpp"

namespace ppde {

struct TerminalCondition {
    std::vector<double> values;  // one per leaf, indexed by leaf bits
};

// Explicit scheme: u = xi on leaves and, per interior node,
//   m = (u_up + u_down)/2,  z = (u_up - u_down)/(2h),  u = m + dt*F(theta, m, z).
// Requires the contraction dt*L < 1 on top of the drift compatibility.
TreeProcess ppde_solve(const Generator& gen, const TerminalCondition& xi,
                       const PathTree& tree);

struct FamilyMember {
    TreeProcess process;
    std::string provenance;
};

struct SubsolutionFamily {
    std::vector<FamilyMember> members;
    std::vector<std::string> dropped;  // provenance + reason for rejected members
    TreeProcess reference;             // the oracle solution the family hugs
};

struct EtaSpec {
    double alpha = 0.0;
    double beta = 0.0;
    HittingSpec horizon;
};

struct FamilySpec {
    std::vector<double> shifts;  // members oracle - shift*(T - t)
    std::vector<EtaSpec> etas;   // stochastic-representation members
};

// Builds candidate subsolutions from the spec, keeps those that pass the
// subsolution check and stay below the oracle (within tol), and reports
// the rest in `dropped`.
SubsolutionFamily build_subsolution_family(const Generator& gen,
                                           const TerminalCondition& xi,
                                           const PathTree& tree,
                                           const FamilySpec& family_spec,
                                           const JetSamplingSpec& jet_spec,
                                           double tol, int threads = 1);

struct PerronResult {
    TreeProcess value;
    std::vector<int> argmax;  // per node: member index attaining the max
};

// Pointwise maximum over the family with argmax provenance.
PerronResult perron_construct(const Generator& gen, const SubsolutionFamily& family);

struct OrderingViolation {
    NodeId node;
    double excess = 0.0;
};

struct ComparisonReport {
    bool terminal_ordered = true;
    bool passed = true;
    double tol = 0.0;
    double max_excess = 0.0;  // worst u - v over all nodes
    std::vector<OrderingViolation> violations;
    std::vector<OrderingViolation> terminal_violations;
};

// Verifies u <= v on leaves, then u <= v + tol everywhere. The terminal
// failure is reported as a broken precondition; the node sweep still runs.
ComparisonReport comparison_check(const TreeProcess& u, const TreeProcess& v,
                                  double tol);

struct MaxPrincipleReport {
    bool terminal_ok = true;        // u <= 0 on leaves
    CheckReport subsolution;        // against L y^+ + L|z|
    bool dominated = true;          // u <= v^{n,m} + tol
    double max_over_comparator = 0.0;
    bool nonpositive = true;        // u <= tol everywhere
    double max_value = 0.0;
    bool passed = false;
    TreeProcess comparator;         // v^{n,m}
};

// Extremal-operator maximum principle harness: checks that u is a
// subsolution of L y^+ + L|z| with u_T <= 0, builds the controlled-value
// comparator from the regularization error terms, and asserts
// u <= comparator + tol and u <= tol.
MaxPrincipleReport pucci_max_principle(const TreeProcess& u, DriftBound bound,
                                       double conv_n, double conv_m,
                                       const JetSamplingSpec& spec, double tol,
                                       int threads = 1);

// Checks that w = u - v is a subsolution for L|z| + delta(theta), with the
// extra 2*rho(theta, eps_n(theta)) slack when `conv_n` is given (the
// regularized-pair variant).
CheckReport difference_subsolution_check(const TreeProcess& u, const TreeProcess& v,
                                         const Generator& f0,
                                         const TreeProcess& delta,
                                         const JetSamplingSpec& spec, double tol,
                                         std::optional<double> conv_n = std::nullopt,
                                         int threads = 1);

// Default check tolerance 5*dt*(1+L)*(1+scale).
double default_tolerance(const PathTree& tree, DriftBound bound, double scale);

}  // namespace ppde
