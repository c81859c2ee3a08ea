#include "prox_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "lassonet/errors.hpp"

namespace lassonet::testing {

namespace {

double soft_mag(double mag, double lambda) { return std::max(mag - lambda, 0.0); }

// Cost at constraint radius w: the optimal b is the vector of norm w/M
// aligned with v, the optimal W clamps each soft-thresholded u entry to w.
double radius_cost(std::span<const double> v, std::span<const double> u, double lambda,
                   double lambda_bar, double m_hier, double w) {
  const double vnorm = l2_norm(v);
  const double bnorm = w / m_hier;
  double cost = 0.5 * (vnorm - bnorm) * (vnorm - bnorm) + lambda * bnorm;
  for (double ui : u) {
    const double target = std::min(soft_mag(std::fabs(ui), lambda_bar), w);
    const double diff = std::fabs(ui) - target;
    cost += 0.5 * diff * diff + lambda_bar * target;
  }
  return cost;
}

}  // namespace

double prox_objective(const ProxInput& input, const ProxParams& p, const ProxResult& point) {
  double cost = 0.0;
  double bnorm_sq = 0.0;
  for (std::size_t i = 0; i < input.theta.size(); ++i) {
    const double d = input.theta[i] - point.theta[i];
    cost += 0.5 * d * d;
    bnorm_sq += point.theta[i] * point.theta[i];
  }
  cost += p.lambda * std::sqrt(bnorm_sq);
  for (std::size_t i = 0; i < input.w.size(); ++i) {
    const double d = input.w[i] - point.w[i];
    cost += 0.5 * d * d + p.lambda_bar * std::fabs(point.w[i]);
  }
  return cost;
}

OracleResult prox_oracle(const ProxInput& input, const ProxParams& p,
                         std::size_t grid_steps) {
  const std::size_t K = input.w.size();
  if (K > 8) throw ContractError("prox_oracle: test-scale only (K <= 8)");
  if (grid_steps < 1) throw ContractError("prox_oracle: grid_steps must be positive");

  const auto v = input.theta.span();
  const auto u = input.w.span();
  const double vnorm = l2_norm(v);
  const double w_max =
      p.m_hier * (vnorm + p.lambda + linf_norm(u) * static_cast<double>(K));

  auto cost = [&](double w) {
    return radius_cost(v, u, p.lambda, p.lambda_bar, p.m_hier, w);
  };

  double best_w = 0.0;
  double best_cost = cost(0.0);
  auto consider = [&](double w) {
    if (w < 0.0 || w > w_max) return;
    const double c = cost(w);
    if (c < best_cost) {
      best_cost = c;
      best_w = w;
    }
  };

  for (std::size_t i = 1; i <= grid_steps; ++i)
    consider(w_max * static_cast<double>(i) / static_cast<double>(grid_steps));

  // interval boundaries: the kinks of the clamped W part
  std::vector<double> bounds{0.0, w_max};
  for (double ui : u) {
    const double kink = soft_mag(std::fabs(ui), p.lambda_bar);
    if (kink > 0.0 && kink < w_max) bounds.push_back(kink);
  }
  std::sort(bounds.begin(), bounds.end());
  for (double b : bounds) consider(b);

  // golden-section on each interval; the cost is quadratic there
  constexpr double kInvPhi = 0.6180339887498949;
  for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
    double lo = bounds[i], hi = bounds[i + 1];
    if (hi - lo <= 0.0) continue;
    double a = hi - kInvPhi * (hi - lo);
    double b = lo + kInvPhi * (hi - lo);
    double fa = cost(a), fb = cost(b);
    for (int it = 0; it < 120 && hi - lo > 1e-15 * w_max; ++it) {
      if (fa < fb) {
        hi = b;
        b = a;
        fb = fa;
        a = hi - kInvPhi * (hi - lo);
        fa = cost(a);
      } else {
        lo = a;
        a = b;
        fa = fb;
        b = lo + kInvPhi * (hi - lo);
        fb = cost(b);
      }
    }
    consider(0.5 * (lo + hi));
    consider(a);
    consider(b);
  }

  OracleResult out;
  out.objective = best_cost;
  out.argmin.m_tilde = 0;
  out.argmin.theta = Vector(input.theta.size());
  out.argmin.w = Vector(K);
  const double bnorm = best_w / p.m_hier;
  if (vnorm > 0.0) {
    for (std::size_t i = 0; i < v.size(); ++i) out.argmin.theta[i] = bnorm * v[i] / vnorm;
  } else if (bnorm > 0.0 && input.theta.size() > 0) {
    out.argmin.theta[0] = bnorm;  // direction is arbitrary when v = 0
  }
  for (std::size_t i = 0; i < K; ++i) {
    const double mag = std::min(soft_mag(std::fabs(u[i]), p.lambda_bar), best_w);
    out.argmin.w[i] = u[i] < 0.0 ? -mag : (u[i] > 0.0 ? mag : 0.0);
  }
  return out;
}

}  // namespace lassonet::testing
