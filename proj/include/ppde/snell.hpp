#pragma once

// Optimal stopping under the upper nonlinear expectation: Snell envelope,
// first-contact optimal stopping region, and an exhaustive stopping-rule
// search used as the optimality oracle at small depth.

#include <optional>

#include "ppde/nlexp.hpp"
#include "ppde/pathspace.hpp"

namespace ppde {

struct SnellResult {
    TreeProcess envelope;         // Y >= X, equality on the horizon
    StoppingRegion optimal_region;  // first node per path with Y = X
    StoppingRegion horizon;
    double value;                 // Y at the root
};

// Backward induction Y = X on the horizon, Y = max(X, one-step sup of the
// children) above it. The DP sets Y to X verbatim whenever stopping is
// optimal, so first contact is detected by exact equality.
SnellResult snell_envelope(const TreeProcess& x, const StoppingRegion& horizon,
                           DriftBound bound);

// Max over every stopping rule dominated by the horizon of the upper
// expectation of the stopped payoff. Rule count explodes in depth, so
// this rejects trees deeper than `max_depth`.
double brute_force_snell(const TreeProcess& x, const StoppingRegion& horizon,
                         DriftBound bound, int max_depth = 5);

// When u at the root strictly exceeds the upper expectation of u at the
// horizon, some node strictly before the horizon has envelope contact;
// at that node (0, 0) is a subjet element of u. Returns none when the
// hypothesis fails.
std::optional<NodeId> fundamental_point(const TreeProcess& u,
                                        const StoppingRegion& horizon,
                                        DriftBound bound);

}  // namespace ppde
