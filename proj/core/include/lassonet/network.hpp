#pragma once

#include <filesystem>
#include <vector>

#include "lassonet/numeric.hpp"
#include "lassonet/rng.hpp"

namespace lassonet {

enum class LossKind {
  squared_error,            // mean over batch of ||pred_i - y_i||^2
  cross_entropy,            // softmax + mean negative log-likelihood, y = class indices
  reconstruction_frobenius  // mean per-sample squared deviation, y has d columns
};

struct Layer {
  Matrix w;  // in x out
  Vector b;  // out

  bool operator==(const Layer&) const = default;
};

/// Residual model f(x) = x * skip + g(x) where g is a ReLU feed-forward
/// stack with identity output. skip is d x k_out; layers[0].w is the d x K
/// first-hidden-layer weight the hierarchy constraint acts on (K may be 0,
/// which collapses g to its output bias and leaves a pure linear model).
struct ResidualNet {
  Matrix skip;
  std::vector<Layer> layers;

  std::size_t input_dim() const { return skip.rows(); }
  std::size_t output_dim() const { return skip.cols(); }
  std::size_t first_hidden() const { return layers.empty() ? 0 : layers.front().w.cols(); }
  std::vector<std::size_t> arch() const;

  bool operator==(const ResidualNet&) const = default;
};

struct Gradients {
  Matrix d_skip;
  std::vector<Layer> d_layers;  // (d_weight, d_bias) mirroring the net
};

/// He-uniform hidden weights, zero biases, zero skip.
/// arch = (d, hidden sizes..., k_out), at least two entries.
ResidualNet make_net(const std::vector<std::size_t>& arch, Rng& rng);

Matrix forward(const ResidualNet& net, const Matrix& x_batch);

/// weight_mask (optional, squared/reconstruction kinds only) restricts the
/// loss to entries where the mask is nonzero and normalizes by their count.
double loss(const ResidualNet& net, const Matrix& x_batch, const Matrix& y_batch,
            LossKind kind, const Matrix* weight_mask = nullptr);

Gradients backward(const ResidualNet& net, const Matrix& x_batch, const Matrix& y_batch,
                   LossKind kind);

struct BackpropOut {
  double loss;
  Gradients grads;
};

/// Fused loss + gradient evaluation (one forward pass).
BackpropOut loss_and_backward(const ResidualNet& net, const Matrix& x_batch,
                              const Matrix& y_batch, LossKind kind,
                              const Matrix* weight_mask = nullptr);

/// Model snapshot container, version 1. Layout (little-endian):
///   "LNETSNAP" | u32 version | u32 activation tag (1 = relu) |
///   u32 arch length | u64 arch dims... | raw doubles: skip row-major,
///   then per layer weight row-major and bias.
/// load(save(net)) reproduces the net bitwise.
void save_net(const ResidualNet& net, const std::filesystem::path& path);
ResidualNet load_net(const std::filesystem::path& path);

}  // namespace lassonet
