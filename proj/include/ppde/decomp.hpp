#pragma once

// Discrete decompositions: Doob-Meyer splitting of supermartingales,
// one-step martingale representation, the Skorokhod reflection of a
// sequence, and the backward-time reflection identity tying the Snell
// compensator to the reflected running minimum.
//
// On a finite tree the Doob-Meyer splitting is exact node by node and
// the compensator is automatically predictable, so none of the limiting
// machinery (convex averaging of dyadic approximations, class-D and
// uniform-integrability hypotheses) that the continuous-time statement
// needs has a counterpart here.

#include <cstdint>
#include <vector>

#include "ppde/nlexp.hpp"
#include "ppde/pathspace.hpp"
#include "ppde/snell.hpp"

namespace ppde {

// Y = Y_0 + M - A with M a martingale under the fixed control's measure,
// A predictable, nondecreasing, both starting at 0.
struct DoobMeyer {
    TreeProcess martingale;   // M
    TreeProcess compensator;  // A
};

// Requires Y to be a supermartingale under the control: at every interior
// node the tilted child mean must not exceed Y. The increments are
//   dA = Y_node - tilted mean of children,  dM = Y_child - tilted mean,
// so the reassembly telescopes node by node.
DoobMeyer doob_meyer(const TreeProcess& y, const DriftControl& control);

struct MartingaleRepr {
    TreeProcess z;  // integrand per interior node, (M_up - M_down)/(2h)
};

// Requires M to be a martingale under the control (checked to `tol`).
// The reconstruction M_child = M_node + Z*(dB - mu*dt) is exact per node.
MartingaleRepr martingale_repr(const TreeProcess& m, const DriftControl& control,
                               double tol = 1e-9);

// lambda = eta - kappa with eta >= 0, kappa nondecreasing and flat off
// {eta = 0}; kappa is the running maximum of the negative part and is
// minimal among all such splittings.
struct SkorokhodPair {
    std::vector<double> eta;
    std::vector<double> kappa;
};

SkorokhodPair skorokhod(const std::vector<double>& lambda);

// Per-path check of the reflection identity: the time-reversed sequence
//   lambda_s = (M*_{T-s} - X_{T-s}) - (M*_T - X_T)
// is reflected, reversed back, and compared against A*_T - A*_t where
// (M*, A*) decompose the envelope under the worst-case drift.
struct ReflectionReport {
    double max_deviation = 0.0;   // max over paths and times of |kbar - (A*_T - A*_t)|
    DoobMeyer decomposition;
    DriftControl drift;
    // One reflected pair per leaf path, indexed in reversed time.
    std::vector<SkorokhodPair> reversed_pairs;
};

ReflectionReport backward_reflection(const TreeProcess& x, const SnellResult& snell,
                                     const DriftControl& mu_star);

// The worst-case drift for an envelope process: per node, the drift whose
// tilted mean attains the one-step sup of the children (+L on ties).
DriftControl envelope_worst_drift(const TreeProcess& y, DriftBound bound);

}  // namespace ppde
