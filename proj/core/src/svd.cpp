#include "lassonet/svd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "lassonet/errors.hpp"

namespace lassonet {

namespace {

// One-sided Jacobi on the columns of g (rows >= cols). Accumulates the
// right rotations into v (cols x cols). Converged when every column pair
// is numerically orthogonal.
void jacobi_orthogonalize(Matrix& g, Matrix& v, std::size_t sweep_cap) {
  const std::size_t m = g.rows(), n = g.cols();
  const double tol = 1e-14;
  for (std::size_t sweep = 0; sweep < sweep_cap; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          const double gp = g(i, p), gq = g(i, q);
          app += gp * gp;
          aqq += gq * gq;
          apq += gp * gq;
        }
        if (std::fabs(apq) <= tol * std::sqrt(app * aqq)) continue;
        rotated = true;
        const double zeta = (aqq - app) / (2.0 * apq);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double gp = g(i, p), gq = g(i, q);
          g(i, p) = c * gp - s * gq;
          g(i, q) = s * gp + c * gq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vp = v(i, p), vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) return;
  }
  throw NumericalError("svd_thin: no convergence after " + std::to_string(sweep_cap) +
                       " Jacobi sweeps");
}

// Fill u column j with a unit vector orthogonal to columns [0, j).
// Used for (numerically) zero singular values.
void complete_orthonormal_column(Matrix& u, std::size_t j) {
  const std::size_t m = u.rows();
  for (std::size_t cand = 0; cand < m; ++cand) {
    std::vector<double> e(m, 0.0);
    e[cand] = 1.0;
    for (std::size_t k = 0; k < j; ++k) {
      double d = 0.0;
      for (std::size_t i = 0; i < m; ++i) d += e[i] * u(i, k);
      for (std::size_t i = 0; i < m; ++i) e[i] -= d * u(i, k);
    }
    const double nrm = l2_norm(e);
    if (nrm > 0.5) {
      for (std::size_t i = 0; i < m; ++i) u(i, j) = e[i] / nrm;
      return;
    }
  }
  throw NumericalError("svd_thin: failed to complete orthonormal basis");
}

SvdResult svd_tall(const Matrix& a) {
  const std::size_t m = a.rows(), n = a.cols();
  Matrix g = a;
  Matrix v = Matrix::identity(n);
  jacobi_orthogonalize(g, v, 100 * std::min(m, n));

  Vector s(n);
  for (std::size_t j = 0; j < n; ++j) {
    double ss = 0.0;
    for (std::size_t i = 0; i < m; ++i) ss += g(i, j) * g(i, j);
    s[j] = std::sqrt(ss);
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return s[x] > s[y]; });

  SvdResult r;
  r.u = Matrix(m, n);
  r.s = Vector(n);
  r.vt = Matrix(n, n);
  const double smax = s[order[0]];
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t src = order[j];
    r.s[j] = s[src];
    if (s[src] > smax * 1e-300 && s[src] > 0.0) {
      for (std::size_t i = 0; i < m; ++i) r.u(i, j) = g(i, src) / s[src];
    } else {
      r.s[j] = 0.0;
      complete_orthonormal_column(r.u, j);
    }
    for (std::size_t i = 0; i < n; ++i) r.vt(j, i) = v(i, src);
  }
  return r;
}

}  // namespace

SvdResult svd_thin(const Matrix& a) {
  if (a.rows() == 0 || a.cols() == 0) throw ContractError("svd_thin: empty matrix");
  if (!a.all_finite()) throw ContractError("svd_thin: non-finite input");
  if (a.rows() >= a.cols()) return svd_tall(a);
  // a = (u1 s v1t)^T of a^T: swap the factors
  SvdResult t = svd_tall(transpose(a));
  SvdResult r;
  r.u = transpose(t.vt);
  r.s = std::move(t.s);
  r.vt = transpose(t.u);
  return r;
}

}  // namespace lassonet
