#pragma once

#include <cstddef>
#include <span>

#include "lassonet/numeric.hpp"

namespace lassonet {

/// Parameters of the per-feature proximal subproblem
///   min_{b,W} 1/2 ||v - b||^2 + 1/2 ||u - W||^2 + lambda ||b||_2 + lambda_bar ||W||_1
///   s.t.      ||W||_inf <= m_hier ||b||_2
/// lambda is the l1/l2 scale (already multiplied by the step size by callers
/// inside a training loop); lambda_bar is the optional entrywise l1 on W.
/// m_hier must be strictly positive: the exact-Lasso limit is expressed as a
/// zero-width first hidden layer, not as m_hier = 0.
struct ProxParams {
  ProxParams(double lambda, double m_hier, double lambda_bar = 0.0);

  double lambda;
  double lambda_bar;
  double m_hier;
};

/// One feature's coefficients: theta is the skip-layer group (length 1 in the
/// scalar case, k_out otherwise), w the feature's first-hidden-layer weights
/// (length K, possibly 0).
struct ProxInput {
  Vector theta;
  Vector w;
};

struct ProxResult {
  Vector theta;
  Vector w;
  std::size_t m_tilde;  // bracketing index found by the scan, diagnostic
};

/// S_lambda(x) = sign(x) * max(|x| - lambda, 0)
double soft_threshold(double x, double lambda);

/// Scalar-theta hierarchical proximal operator. Global minimizer of the
/// subproblem above with lambda_bar = 0 and scalar b.
ProxResult hier_prox(const ProxInput& input, const ProxParams& p);

/// Group (vector-theta) variant; shrinks theta along its own direction.
ProxResult group_hier_prox(const ProxInput& input, const ProxParams& p);

/// Generalized form with the optional entrywise l1 on W (lambda_bar >= 0).
/// With lambda_bar = 0 this is the same computation as group_hier_prox.
ProxResult general_hier_prox(const ProxInput& input, const ProxParams& p);

struct ProxAllResult {
  Matrix theta;  // d x k_out
  Matrix w1;     // d x K
};

/// Applies the operator independently to every feature row of (theta, w1).
/// theta is d x k_out (k_out = 1 required when grouped is false); w1 is d x K.
ProxAllResult apply_prox_all_features(const Matrix& theta, const Matrix& w1,
                                      const ProxParams& p, bool grouped);

}  // namespace lassonet
