#include "lassonet/network.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "lassonet/errors.hpp"

namespace lassonet {

std::vector<std::size_t> ResidualNet::arch() const {
  std::vector<std::size_t> a;
  a.push_back(input_dim());
  for (const Layer& l : layers) a.push_back(l.w.cols());
  return a;
}

ResidualNet make_net(const std::vector<std::size_t>& arch, Rng& rng) {
  if (arch.size() < 2) throw ContractError("make_net: arch needs input and output dims");
  ResidualNet net;
  net.skip = Matrix(arch.front(), arch.back());
  for (std::size_t l = 0; l + 1 < arch.size(); ++l) {
    const std::size_t in = arch[l], out = arch[l + 1];
    Layer layer{Matrix(in, out), Vector(out)};
    if (in > 0) {
      const double limit = std::sqrt(6.0 / static_cast<double>(in));
      for (std::size_t i = 0; i < layer.w.size(); ++i)
        layer.w.data()[i] = rng.next_uniform(-limit, limit);
    }
    net.layers.push_back(std::move(layer));
  }
  return net;
}

namespace {

void check_input(const ResidualNet& net, const Matrix& x) {
  if (x.cols() != net.input_dim())
    throw ContractError("forward: input has " + std::to_string(x.cols()) +
                        " columns, model expects " + std::to_string(net.input_dim()));
  if (net.layers.empty()) throw ContractError("forward: model has no layers");
}

// z = a * w + b (bias broadcast over rows)
Matrix affine(const Matrix& a, const Layer& layer) {
  Matrix z = matmul(a, layer.w);
  for (std::size_t i = 0; i < z.rows(); ++i)
    for (std::size_t j = 0; j < z.cols(); ++j) z(i, j) += layer.b[j];
  return z;
}

void relu_inplace(Matrix& z) {
  for (std::size_t i = 0; i < z.size(); ++i)
    if (z.data()[i] < 0.0) z.data()[i] = 0.0;
}

struct ForwardCache {
  std::vector<Matrix> activations;  // a_0 = x, a_l = post-relu hidden outputs
  std::vector<Matrix> preacts;      // z_l per layer
  Matrix output;                    // x*skip + g(x)
};

ForwardCache forward_cached(const ResidualNet& net, const Matrix& x) {
  check_input(net, x);
  ForwardCache c;
  c.activations.reserve(net.layers.size());
  c.preacts.reserve(net.layers.size());
  c.activations.push_back(x);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    Matrix z = affine(c.activations.back(), net.layers[l]);
    c.preacts.push_back(z);
    if (l + 1 < net.layers.size()) {
      relu_inplace(z);
      c.activations.push_back(std::move(z));
    }
  }
  c.output = matmul(x, net.skip);
  const Matrix& g_out = c.preacts.back();
  for (std::size_t i = 0; i < c.output.size(); ++i) c.output.data()[i] += g_out.data()[i];
  return c;
}

void check_targets(const ResidualNet& net, const Matrix& x, const Matrix& y, LossKind kind,
                   const Matrix* mask) {
  if (y.rows() != x.rows()) throw ContractError("loss: batch row counts differ");
  switch (kind) {
    case LossKind::squared_error:
    case LossKind::reconstruction_frobenius:
      if (y.cols() != net.output_dim())
        throw ContractError("loss: target width does not match model output");
      break;
    case LossKind::cross_entropy: {
      if (net.output_dim() < 2)
        throw ContractError("loss: cross_entropy needs at least 2 output classes");
      if (y.cols() != 1) throw ContractError("loss: cross_entropy targets are one class column");
      if (mask) throw ContractError("loss: cross_entropy does not take a mask");
      const double c = static_cast<double>(net.output_dim());
      for (std::size_t i = 0; i < y.rows(); ++i) {
        const double v = y(i, 0);
        if (!(v >= 0.0) || v >= c || v != std::floor(v))
          throw ContractError("loss: label out of range at row " + std::to_string(i));
      }
      break;
    }
  }
  if (mask && (mask->rows() != y.rows() || mask->cols() != y.cols()))
    throw ContractError("loss: mask shape does not match targets");
}

// Loss value and dL/d(output). denom is the batch size, or the number of
// unmasked entries when a mask is given.
double output_loss_and_grad(const Matrix& pred, const Matrix& y, LossKind kind,
                            const Matrix* mask, Matrix* grad_out) {
  const std::size_t n = pred.rows();
  if (kind == LossKind::cross_entropy) {
    const std::size_t c = pred.cols();
    double total = 0.0;
    if (grad_out) *grad_out = Matrix(n, c);
    for (std::size_t i = 0; i < n; ++i) {
      double zmax = pred(i, 0);
      for (std::size_t j = 1; j < c; ++j) zmax = std::max(zmax, pred(i, j));
      double sum = 0.0;
      for (std::size_t j = 0; j < c; ++j) sum += std::exp(pred(i, j) - zmax);
      const double lse = zmax + std::log(sum);
      const std::size_t label = static_cast<std::size_t>(y(i, 0));
      total += lse - pred(i, label);
      if (grad_out) {
        for (std::size_t j = 0; j < c; ++j)
          (*grad_out)(i, j) = std::exp(pred(i, j) - lse) / static_cast<double>(n);
        (*grad_out)(i, label) -= 1.0 / static_cast<double>(n);
      }
    }
    return total / static_cast<double>(n);
  }

  double denom = static_cast<double>(n);
  if (mask) {
    double cnt = 0.0;
    for (std::size_t i = 0; i < mask->size(); ++i) cnt += (mask->data()[i] != 0.0) ? 1.0 : 0.0;
    if (cnt == 0.0) throw ContractError("loss: mask selects no entries");
    denom = cnt;
  }
  double total = 0.0;
  if (grad_out) *grad_out = Matrix(n, pred.cols());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool on = !mask || mask->data()[i] != 0.0;
    if (!on) continue;
    const double r = pred.data()[i] - y.data()[i];
    total += r * r;
    if (grad_out) grad_out->data()[i] = 2.0 * r / denom;
  }
  return total / denom;
}

}  // namespace

Matrix forward(const ResidualNet& net, const Matrix& x_batch) {
  return forward_cached(net, x_batch).output;
}

double loss(const ResidualNet& net, const Matrix& x_batch, const Matrix& y_batch,
            LossKind kind, const Matrix* weight_mask) {
  check_targets(net, x_batch, y_batch, kind, weight_mask);
  const Matrix pred = forward(net, x_batch);
  return output_loss_and_grad(pred, y_batch, kind, weight_mask, nullptr);
}

BackpropOut loss_and_backward(const ResidualNet& net, const Matrix& x_batch,
                              const Matrix& y_batch, LossKind kind,
                              const Matrix* weight_mask) {
  check_targets(net, x_batch, y_batch, kind, weight_mask);
  ForwardCache cache = forward_cached(net, x_batch);

  BackpropOut out;
  Matrix g;  // dL/d(output), n x k_out
  out.loss = output_loss_and_grad(cache.output, y_batch, kind, weight_mask, &g);

  out.grads.d_skip = matmul(transpose(x_batch), g);
  out.grads.d_layers.resize(net.layers.size());
  for (std::size_t li = net.layers.size(); li-- > 0;) {
    const Matrix& a_in = cache.activations[li];
    out.grads.d_layers[li].w = matmul(transpose(a_in), g);
    Vector db(net.layers[li].b.size());
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) db[j] += g(i, j);
    out.grads.d_layers[li].b = std::move(db);
    if (li > 0) {
      Matrix gprev = matmul(g, transpose(net.layers[li].w));
      const Matrix& z = cache.preacts[li - 1];
      for (std::size_t i = 0; i < gprev.size(); ++i)
        if (z.data()[i] <= 0.0) gprev.data()[i] = 0.0;
      g = std::move(gprev);
    }
  }
  return out;
}

Gradients backward(const ResidualNet& net, const Matrix& x_batch, const Matrix& y_batch,
                   LossKind kind) {
  return loss_and_backward(net, x_batch, y_batch, kind).grads;
}

namespace {

constexpr char kMagic[8] = {'L', 'N', 'E', 'T', 'S', 'N', 'A', 'P'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kActivationRelu = 1;

template <typename T>
void write_pod(std::ofstream& f, const T& v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& f) {
  T v{};
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!f) throw ParseError("model snapshot: truncated file");
  return v;
}

}  // namespace

void save_net(const ResidualNet& net, const std::filesystem::path& path) {
  // temp + rename keeps concurrent writers from interleaving partial output
  const std::filesystem::path tmp =
      path.parent_path() / (path.filename().string() + ".tmp");
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw ParseError("model snapshot: cannot open " + tmp.string() + " for writing");
    f.write(kMagic, sizeof(kMagic));
    write_pod(f, kVersion);
    write_pod(f, kActivationRelu);
    const auto arch = net.arch();
    write_pod(f, static_cast<std::uint32_t>(arch.size()));
    for (std::size_t d : arch) write_pod(f, static_cast<std::uint64_t>(d));
    f.write(reinterpret_cast<const char*>(net.skip.data()),
            static_cast<std::streamsize>(net.skip.size() * sizeof(double)));
    for (const Layer& l : net.layers) {
      f.write(reinterpret_cast<const char*>(l.w.data()),
              static_cast<std::streamsize>(l.w.size() * sizeof(double)));
      f.write(reinterpret_cast<const char*>(l.b.data()),
              static_cast<std::streamsize>(l.b.size() * sizeof(double)));
    }
    if (!f) throw ParseError("model snapshot: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

ResidualNet load_net(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("model snapshot: cannot open " + path.string());
  char magic[8];
  f.read(magic, sizeof(magic));
  if (!f || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw ParseError("model snapshot: bad magic in " + path.string());
  if (read_pod<std::uint32_t>(f) != kVersion)
    throw ParseError("model snapshot: unsupported version in " + path.string());
  if (read_pod<std::uint32_t>(f) != kActivationRelu)
    throw ParseError("model snapshot: unsupported activation tag in " + path.string());
  const std::uint32_t n_arch = read_pod<std::uint32_t>(f);
  if (n_arch < 2) throw ParseError("model snapshot: bad arch length");
  std::vector<std::size_t> arch(n_arch);
  for (auto& d : arch) d = static_cast<std::size_t>(read_pod<std::uint64_t>(f));

  ResidualNet net;
  net.skip = Matrix(arch.front(), arch.back());
  f.read(reinterpret_cast<char*>(net.skip.data()),
         static_cast<std::streamsize>(net.skip.size() * sizeof(double)));
  for (std::size_t l = 0; l + 1 < arch.size(); ++l) {
    Layer layer{Matrix(arch[l], arch[l + 1]), Vector(arch[l + 1])};
    f.read(reinterpret_cast<char*>(layer.w.data()),
           static_cast<std::streamsize>(layer.w.size() * sizeof(double)));
    f.read(reinterpret_cast<char*>(layer.b.data()),
           static_cast<std::streamsize>(layer.b.size() * sizeof(double)));
    net.layers.push_back(std::move(layer));
  }
  if (!f) throw ParseError("model snapshot: truncated file " + path.string());
  return net;
}

}  // namespace lassonet
