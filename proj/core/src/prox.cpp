#include "lassonet/prox.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "lassonet/errors.hpp"

namespace lassonet {

ProxParams::ProxParams(double lambda_, double m_hier_, double lambda_bar_)
    : lambda(lambda_), lambda_bar(lambda_bar_), m_hier(m_hier_) {
  if (!(lambda >= 0.0)) throw ContractError("ProxParams: lambda must be >= 0");
  if (!(lambda_bar >= 0.0)) throw ContractError("ProxParams: lambda_bar must be >= 0");
  if (!(m_hier > 0.0)) throw ContractError("ProxParams: m_hier must be > 0");
}

double soft_threshold(double x, double lambda) {
  if (!(lambda >= 0.0)) throw ContractError("soft_threshold: lambda must be >= 0");
  const double mag = std::fabs(x) - lambda;
  if (mag <= 0.0) return 0.0;
  return x < 0.0 ? -mag : mag;
}

namespace {

struct Workspace {
  std::vector<double> sorted_abs;  // |u| descending
};

// Core solver shared by all three public operators. Writes the minimizer
// into theta_out / w_out (sized like v / u) and returns the bracketing index.
//
// The candidate radii are tau_m = (||v|| - lambda + M * sum_{i<=m}(|u_(i)| - lambda_bar))_+
// / (1 + m M^2); the unique m with M tau_m in [S_lb(|u_(m+1)|), S_lb(|u_(m)|))
// gives the optimum. ||v|| = 0 collapses the theta direction, in which case
// both outputs are zeroed to keep the hierarchy bound exact.
std::size_t solve_feature(std::span<const double> v, std::span<const double> u,
                          const ProxParams& p, Workspace& ws, std::span<double> theta_out,
                          std::span<double> w_out) {
  const std::size_t K = u.size();
  const double M = p.m_hier;

  ws.sorted_abs.resize(K);
  for (std::size_t i = 0; i < K; ++i) ws.sorted_abs[i] = std::fabs(u[i]);
  std::stable_sort(ws.sorted_abs.begin(), ws.sorted_abs.end(), std::greater<double>());

  const double vnorm = l2_norm(v);

  double chosen_tau = 0.0;
  std::size_t m_tilde = 0;
  std::size_t matches = 0;
  double prefix = 0.0;  // running sum of (|u_(i)| - lambda_bar), i = 1..m
  for (std::size_t m = 0; m <= K; ++m) {
    if (m > 0) prefix += ws.sorted_abs[m - 1] - p.lambda_bar;
    const double slack = (vnorm - p.lambda) + M * prefix;
    const double tau = slack > 0.0 ? slack / (1.0 + static_cast<double>(m) * M * M) : 0.0;
    const double w_m = M * tau;
    const double upper = m == 0 ? std::numeric_limits<double>::infinity()
                                : soft_threshold(ws.sorted_abs[m - 1], p.lambda_bar);
    const double lower = m == K ? 0.0 : soft_threshold(ws.sorted_abs[m], p.lambda_bar);
    if (w_m >= lower && w_m < upper) {
      if (matches == 0) {
        m_tilde = m;
        chosen_tau = tau;
      }
      ++matches;
    }
  }
  if (matches != 1)
    throw NumericalError("hier_prox: bracketing index not unique (" +
                         std::to_string(matches) + " matches, K=" + std::to_string(K) + ")");

  if (vnorm == 0.0 || chosen_tau == 0.0) {
    std::fill(theta_out.begin(), theta_out.end(), 0.0);
    std::fill(w_out.begin(), w_out.end(), 0.0);
    return m_tilde;
  }

  if (chosen_tau == vnorm) {
    // lambda = 0 with a slack constraint: the operator is the identity on theta
    std::copy(v.begin(), v.end(), theta_out.begin());
  } else {
    for (std::size_t i = 0; i < v.size(); ++i) theta_out[i] = chosen_tau * (v[i] / vnorm);
  }
  // Recompute the bound from the rounded theta so feasibility holds exactly
  const double cap = M * l2_norm(std::span<const double>(theta_out.data(), theta_out.size()));
  for (std::size_t i = 0; i < K; ++i) {
    const double shrunk = soft_threshold(u[i], p.lambda_bar);
    const double mag = std::min(std::fabs(shrunk), cap);
    w_out[i] = shrunk < 0.0 ? -mag : (shrunk > 0.0 ? mag : 0.0);
  }
  return m_tilde;
}

ProxResult run_single(const ProxInput& input, const ProxParams& p) {
  ProxResult r;
  r.theta = Vector(input.theta.size());
  r.w = Vector(input.w.size());
  Workspace ws;
  r.m_tilde = solve_feature(input.theta.span(), input.w.span(), p, ws, r.theta.span(),
                            r.w.span());
  return r;
}

}  // namespace

ProxResult hier_prox(const ProxInput& input, const ProxParams& p) {
  if (input.theta.size() != 1)
    throw ContractError("hier_prox: theta must be scalar (use group_hier_prox)");
  if (p.lambda_bar != 0.0) throw ContractError("hier_prox: lambda_bar must be 0");
  return run_single(input, p);
}

ProxResult group_hier_prox(const ProxInput& input, const ProxParams& p) {
  if (p.lambda_bar != 0.0) throw ContractError("group_hier_prox: lambda_bar must be 0");
  return run_single(input, p);
}

ProxResult general_hier_prox(const ProxInput& input, const ProxParams& p) {
  return run_single(input, p);
}

ProxAllResult apply_prox_all_features(const Matrix& theta, const Matrix& w1,
                                      const ProxParams& p, bool grouped) {
  if (theta.rows() != w1.rows())
    throw ContractError("apply_prox_all_features: theta and w1 row counts differ");
  if (!grouped && theta.cols() != 1)
    throw ContractError("apply_prox_all_features: scalar mode needs theta with one column");
  if (grouped && theta.cols() == 0)
    throw ContractError("apply_prox_all_features: empty theta group");

  ProxAllResult out{Matrix(theta.rows(), theta.cols()), Matrix(w1.rows(), w1.cols())};
  Workspace ws;
  for (std::size_t j = 0; j < theta.rows(); ++j) {
    solve_feature(theta.row(j), w1.row(j), p, ws, out.theta.row(j), out.w1.row(j));
  }
  return out;
}

}  // namespace lassonet
