#pragma once

// Lipschitz regularization by sup/inf-convolution in the backward
// distance, radius-indexed semicontinuous envelopes, and the
// regularization error radius used by perturbed-generator checks.

#include "ppde/pathspace.hpp"

namespace ppde {

struct ConvolutionResult {
    TreeProcess regularized;
    double n;      // penalty weight
    double bound;  // sup norm of the input, the search radius driver
};

// u^n(theta) = max over all nodes theta' of u(theta') - n * bdist(theta, theta').
// Exact maximization; candidates are pruned only when |t - t'| alone makes
// them beat nothing, which cannot change the result.
ConvolutionResult sup_convolution(const TreeProcess& u, double n);

// Mirror by duality: inf_convolution(v, n) = -sup_convolution(-v, n).
ConvolutionResult inf_convolution(const TreeProcess& v, double n);

// Smallest penalty weight beyond which the sup-convolution returns u
// itself: 2*sup|u| / (minimal positive backward distance between nodes).
double convolution_identity_threshold(const TreeProcess& u);

// Radius-indexed envelopes: max (resp. min) of w over the forward-distance
// ball of radius r.
TreeProcess usc_envelope(const TreeProcess& w, double radius);
TreeProcess lsc_envelope(const TreeProcess& w, double radius);

// (2M+1)/n + modulus of the stopped path over the window 2M/n.
double epsilon_n(const StoppedPath& path, double n, double m_bound);
double epsilon_n(const PathTree& tree, NodeId node, double n, double m_bound);

}  // namespace ppde
