#pragma once

// Semijets and viscosity checks. A slope pair (alpha, beta) belongs to
// the subjet of u at a node when immediate stopping is optimal for the
// obstacle u - alpha*t - beta*B on the subtree, up to a strictly positive
// horizon; the subsolution check then tests -alpha - F(theta, u, beta)
// over sampled jets.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ppde/nlexp.hpp"
#include "ppde/pathspace.hpp"

namespace ppde {

// Semilinear nonlinearity F(theta, y, z) with its Lipschitz/drift
// constant, a monotonicity flag in y, the theta-modulus rho(theta, x, y)
// bounding |F(theta,y,.) - F(theta',y,.)| for x >= dist(theta,theta'),
// and a bound process dominating |F(.,0,0)|.
struct Generator {
    std::string name;
    DriftBound bound;
    bool monotone_in_y = false;
    std::function<double(const PathTree&, NodeId, double, double)> eval;
    std::function<double(const PathTree&, NodeId, double, double)> rho;
    std::function<double(const PathTree&, NodeId)> f0;
};

// Random spot check of the declared Lipschitz constant and monotonicity.
struct GeneratorDiagnostics {
    double lipschitz_excess = 0.0;  // worst |dF| - L(|dy|+|dz|), <= 0 when clean
    bool monotone_ok = true;
};
GeneratorDiagnostics spot_check_generator(const Generator& gen, const PathTree& tree,
                                          std::uint64_t seed, int samples = 200);

// Jet candidate at a node: time slope, space slope, and a strictly
// positive stopping horizon on the subtree rooted at the node.
struct JetCandidate {
    double alpha = 0.0;
    double beta = 0.0;
    StoppingRegion horizon;
};

bool subjet_test(const TreeProcess& u, NodeId at, const JetCandidate& cand,
                 DriftBound bound);
bool superjet_test(const TreeProcess& u, NodeId at, const JetCandidate& cand,
                   DriftBound bound);

// The admissible alphas form an up-closed half line; this locates its
// edge by bracketing and bisection to 1e-10 and returns an admissible
// value. Returns +infinity when no admissible alpha is found.
double subjet_frontier(const TreeProcess& u, NodeId at, double beta,
                       const StoppingRegion& horizon, DriftBound bound);
// Mirror: the admissible alphas are down-closed; returns the edge from
// above (-infinity when empty).
double superjet_frontier(const TreeProcess& u, NodeId at, double beta,
                         const StoppingRegion& horizon, DriftBound bound);

// Hitting-time horizon template: exit at time_steps grid steps or when
// the tail path leaves (-space_steps*h, +space_steps*h).
struct HittingSpec {
    double time_steps = 2;
    double space_steps = 1.5;
};

struct JetSamplingSpec {
    int beta_points = 9;
    double beta_halfwidth = 0.0;  // 0 = auto: 2 * sup |discrete z-slope of u|
    std::vector<HittingSpec> hitting = {{2, 1.5}, {3, 2.5}};
    // Localized check: only nodes strictly before this rule are swept and
    // sampled horizons stop no later than it. For processes that solve
    // their equation on the region before a hitting time only.
    std::optional<StoppingRegion> localize;
};

struct JetViolation {
    NodeId node;
    double beta = 0.0;
    double margin = 0.0;
    std::string horizon;
};

struct CheckReport {
    bool passed = true;
    double tol = 0.0;
    double max_margin = 0.0;  // largest inequality excess seen, violations or not
    std::size_t checks = 0;
    std::vector<JetViolation> violations;
};

// For every non-leaf node and sampled beta, computes the subjet frontier
// for the one-step horizon (closed form) and each hitting-time horizon
// (bisection), and reports nodes where -alpha* - F(theta, u, beta)
// exceeds tol.
CheckReport check_subsolution(const TreeProcess& u, const Generator& gen,
                              const JetSamplingSpec& spec, double tol,
                              int threads = 1);
CheckReport check_supersolution(const TreeProcess& u, const Generator& gen,
                                const JetSamplingSpec& spec, double tol,
                                int threads = 1);

// Stochastic representation: before the horizon, the lower expectation of
// u at the horizon minus alpha*(time to go) minus beta*(path increment);
// on and after the horizon, u itself.
TreeProcess special_solution(const TreeProcess& u, const StoppingRegion& horizon,
                             double alpha, double beta, DriftBound bound);

// The same value with its one-step integrand and the drift attaining the
// lower expectation, for reassembly checks: before the horizon,
//   eta_child = eta_node + Z*dB + (alpha + L|beta - Z|)*dt.
struct SpecialSolutionRepr {
    TreeProcess eta;
    TreeProcess z;       // meaningful strictly before the horizon
    DriftControl drift;  // -L*sgn(Z - beta), +L on ties
};
SpecialSolutionRepr special_solution_repr(const TreeProcess& u,
                                          const StoppingRegion& horizon,
                                          double alpha, double beta,
                                          DriftBound bound);

// Exponential change of variable u~ = e^{lambda t} u for lambda <= 0,
// with the matching generator
//   F~(theta, y, z) = -lambda y + e^{lambda t} F(theta, e^{-lambda t} y,
//                                                e^{-lambda t} z),
// so that solutions map to solutions. The drift class is unchanged: the
// z-Lipschitz constant survives the transform.
std::pair<TreeProcess, Generator> change_variable(const TreeProcess& u,
                                                  const Generator& gen,
                                                  double lambda);

// Builds the hitting-time horizon of a spec on the subtree below a node.
StoppingRegion hitting_horizon(const PathTree& subtree, const HittingSpec& spec);

// Auto beta half-width: twice the largest discrete space slope of u.
double default_beta_halfwidth(const TreeProcess& u);

}  // namespace ppde
