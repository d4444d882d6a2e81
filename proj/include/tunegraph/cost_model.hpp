/* Copyright 2026 The tunegraph Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

/*!
 * \file cost_model.hpp
 * \brief GCN embedding + weighted-sum/max aggregation + 3-layer regression
 *        head, with exact reverse-mode gradients and a bit-exact checkpoint.
 *
 * Predictions live on the normalized log scale: y = (log2(GFLOPS) - mean) / std
 * with the statistics stored in the model.
 */

#ifndef TUNEGRAPH_COST_MODEL_HPP_
#define TUNEGRAPH_COST_MODEL_HPP_

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "tunegraph/common.hpp"
#include "tunegraph/graph_encoding.hpp"

namespace tunegraph {

/// Label assigned to infeasible measurements before log normalization.
inline constexpr double kFloorGflops = 1e-3;

// ---------------------------------------------------------------------------
// Regression head
// ---------------------------------------------------------------------------

struct HeadDims {
  int in = 64;
  int hidden1 = 64;
  int hidden2 = 64;

  std::size_t num_params() const {
    return static_cast<std::size_t>(hidden1 * in + hidden1 + hidden2 * hidden1 + hidden2 + hidden2 + 1);
  }
  // Offsets of W1, b1, W2, b2, W3, b3 in the flat parameter vector. Weights are
  // row-major (out x in).
  std::size_t w1() const { return 0; }
  std::size_t b1() const { return w1() + static_cast<std::size_t>(hidden1 * in); }
  std::size_t w2() const { return b1() + static_cast<std::size_t>(hidden1); }
  std::size_t b2() const { return w2() + static_cast<std::size_t>(hidden2 * hidden1); }
  std::size_t w3() const { return b2() + static_cast<std::size_t>(hidden2); }
  std::size_t b3() const { return w3() + static_cast<std::size_t>(hidden2); }

  friend bool operator==(const HeadDims&, const HeadDims&) = default;
};

/// Three affine layers; ReLU after the first two, linear output.
struct HeadParams {
  HeadDims dims;
  Eigen::VectorXd flat;
};

/// Forward-mode dual number; used to get exact Hessian-vector products by
/// running the head gradient with tangent-carrying parameters.
struct Dual {
  double v = 0.0;
  double d = 0.0;
  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT(google-explicit-constructor)
  Dual(double value, double tangent) : v(value), d(tangent) {}
};
inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
inline Dual& operator+=(Dual& a, Dual b) { return a = a + b; }

inline double primal(double x) { return x; }
inline double primal(Dual x) { return x.v; }

template <class T>
struct HeadTrace {
  std::vector<T> pre1, act1, pre2, act2;
  T out{};
};

template <class T>
T head_forward(const HeadDims& d, const T* p, const double* z, HeadTrace<T>& tr) {
  tr.pre1.assign(d.hidden1, T{});
  tr.act1.assign(d.hidden1, T{});
  tr.pre2.assign(d.hidden2, T{});
  tr.act2.assign(d.hidden2, T{});
  for (int i = 0; i < d.hidden1; ++i) {
    T acc = p[d.b1() + i];
    const T* row = p + d.w1() + static_cast<std::size_t>(i) * d.in;
    for (int j = 0; j < d.in; ++j) acc += row[j] * T(z[j]);
    tr.pre1[i] = acc;
    tr.act1[i] = primal(acc) > 0.0 ? acc : T{};
  }
  for (int i = 0; i < d.hidden2; ++i) {
    T acc = p[d.b2() + i];
    const T* row = p + d.w2() + static_cast<std::size_t>(i) * d.hidden1;
    for (int j = 0; j < d.hidden1; ++j) acc += row[j] * tr.act1[j];
    tr.pre2[i] = acc;
    tr.act2[i] = primal(acc) > 0.0 ? acc : T{};
  }
  T out = p[d.b3()];
  for (int j = 0; j < d.hidden2; ++j) out += p[d.w3() + j] * tr.act2[j];
  tr.out = out;
  return out;
}

/// Accumulates dout * d(out)/d(params) into grad, and dout * d(out)/dz into
/// grad_z when given (double only).
template <class T>
void head_backward(const HeadDims& d, const T* p, const double* z, const HeadTrace<T>& tr, T dout,
                   T* grad, double* grad_z) {
  std::vector<T> dpre2(d.hidden2), dpre1(d.hidden1);
  grad[d.b3()] += dout;
  for (int j = 0; j < d.hidden2; ++j) {
    grad[d.w3() + j] += dout * tr.act2[j];
    dpre2[j] = primal(tr.pre2[j]) > 0.0 ? dout * p[d.w3() + j] : T{};
  }
  std::vector<T> dact1(d.hidden1, T{});
  for (int i = 0; i < d.hidden2; ++i) {
    grad[d.b2() + i] += dpre2[i];
    T* grow = grad + d.w2() + static_cast<std::size_t>(i) * d.hidden1;
    const T* prow = p + d.w2() + static_cast<std::size_t>(i) * d.hidden1;
    for (int j = 0; j < d.hidden1; ++j) {
      grow[j] += dpre2[i] * tr.act1[j];
      dact1[j] += prow[j] * dpre2[i];
    }
  }
  for (int i = 0; i < d.hidden1; ++i) dpre1[i] = primal(tr.pre1[i]) > 0.0 ? dact1[i] : T{};
  for (int i = 0; i < d.hidden1; ++i) {
    grad[d.b1() + i] += dpre1[i];
    T* grow = grad + d.w1() + static_cast<std::size_t>(i) * d.in;
    for (int j = 0; j < d.in; ++j) grow[j] += dpre1[i] * T(z[j]);
  }
  if constexpr (std::is_same_v<T, double>) {
    if (grad_z != nullptr) {
      for (int i = 0; i < d.hidden1; ++i) {
        if (dpre1[i] == 0.0) continue;
        const double* prow = p + d.w1() + static_cast<std::size_t>(i) * d.in;
        for (int j = 0; j < d.in; ++j) grad_z[j] += prow[j] * dpre1[i];
      }
    }
  }
}

inline double head_predict(const HeadParams& h, const Eigen::VectorXd& z) {
  if (z.size() != h.dims.in) throw DomainError("embedding length does not match head input");
  HeadTrace<double> tr;
  return head_forward(h.dims, h.flat.data(), z.data(), tr);
}

/// A sample reduced to its (frozen) embedding and normalized label.
struct EmbeddedSample {
  Eigen::VectorXd embedding;
  double label = 0.0;
};

/// Mean squared error over `batch` and its gradient w.r.t. the flat head
/// parameters. Templated so the same code yields Hessian-vector products.
template <class T>
T head_loss_grad(const HeadDims& d, const std::vector<T>& p, std::span<const EmbeddedSample> batch,
                 std::vector<T>& grad) {
  if (batch.empty()) throw DomainError("empty batch");
  grad.assign(p.size(), T{});
  T loss{};
  const double scale = 1.0 / static_cast<double>(batch.size());
  HeadTrace<T> tr;
  for (const auto& s : batch) {
    const T pred = head_forward(d, p.data(), s.embedding.data(), tr);
    const T err = pred - T(s.label);
    loss += err * err * T(scale);
    head_backward(d, p.data(), s.embedding.data(), tr, err * T(2.0 * scale), grad.data(),
                  static_cast<double*>(nullptr));
  }
  return loss;
}

inline double head_loss_grad(const HeadParams& h, std::span<const EmbeddedSample> batch,
                             Eigen::VectorXd& grad) {
  std::vector<double> p(h.flat.data(), h.flat.data() + h.flat.size());
  std::vector<double> g;
  const double loss = head_loss_grad<double>(h.dims, p, batch, g);
  grad = Eigen::Map<Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(g.size()));
  return loss;
}

/// Exact Hessian of the batch loss times `v`.
inline Eigen::VectorXd head_hvp(const HeadParams& h, std::span<const EmbeddedSample> batch,
                                const Eigen::VectorXd& v) {
  std::vector<Dual> p(h.flat.size());
  for (Eigen::Index i = 0; i < h.flat.size(); ++i) p[i] = Dual(h.flat[i], v[i]);
  std::vector<Dual> g;
  head_loss_grad<Dual>(h.dims, p, batch, g);
  Eigen::VectorXd out(h.flat.size());
  for (Eigen::Index i = 0; i < h.flat.size(); ++i) out[i] = g[i].d;
  return out;
}

// ---------------------------------------------------------------------------
// Full model
// ---------------------------------------------------------------------------

struct GcnParams {
  std::vector<Eigen::MatrixXd> layers;  // d_{l-1} x d_l, no bias
};

struct AggParams {
  Eigen::VectorXd sum_weights;  // per channel
};

struct FeatureNorm {
  std::array<double, kFeatureDim> mean{};
  std::array<double, kFeatureDim> std{1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1};
};

struct LabelNorm {
  double mean = 0.0;
  double std = 1.0;
};

struct ModelDims {
  std::vector<int> gcn_widths{32, 32};
  int hidden1 = 64;
  int hidden2 = 64;

  int embedding_width() const { return gcn_widths.empty() ? kFeatureDim : gcn_widths.back(); }
  HeadDims head() const { return {2 * embedding_width(), hidden1, hidden2}; }
};

struct ModelState {
  GcnParams gcn;
  AggParams agg;
  HeadParams head;
  FeatureNorm feature_norm;
  LabelNorm label_norm;

  double normalize_label(double gflops) const {
    return (std::log2(std::max(gflops, kFloorGflops)) - label_norm.mean) / label_norm.std;
  }
  double to_gflops(double normalized) const {
    return std::exp2(normalized * label_norm.std + label_norm.mean);
  }
};

/// Gradients with the same shapes as the trainable fields of ModelState.
struct Gradients {
  GcnParams gcn;
  AggParams agg;
  Eigen::VectorXd head;
};

enum class GradScope { kHeadOnly, kAll };

inline Gradients zero_gradients(const ModelState& m) {
  Gradients g;
  for (const auto& w : m.gcn.layers) g.gcn.layers.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
  g.agg.sum_weights = Eigen::VectorXd::Zero(m.agg.sum_weights.size());
  g.head = Eigen::VectorXd::Zero(m.head.flat.size());
  return g;
}

namespace detail {

inline void uniform_fill(double* data, std::size_t n, double fan_in, Rng& rng) {
  const double s = 1.0 / std::sqrt(fan_in);
  std::uniform_real_distribution<double> u(-s, s);
  for (std::size_t i = 0; i < n; ++i) data[i] = u(rng);
}

}  // namespace detail

/// uniform(-s, s) with s = 1/sqrt(fan_in) for every weight and bias.
inline HeadParams init_head(const HeadDims& hd, Rng& rng) {
  HeadParams h;
  h.dims = hd;
  h.flat.resize(static_cast<Eigen::Index>(hd.num_params()));
  double* p = h.flat.data();
  detail::uniform_fill(p + hd.w1(), hd.b1() - hd.w1(), hd.in, rng);
  detail::uniform_fill(p + hd.b1(), hd.w2() - hd.b1(), hd.in, rng);
  detail::uniform_fill(p + hd.w2(), hd.b2() - hd.w2(), hd.hidden1, rng);
  detail::uniform_fill(p + hd.b2(), hd.w3() - hd.b2(), hd.hidden1, rng);
  detail::uniform_fill(p + hd.w3(), hd.b3() - hd.w3(), hd.hidden2, rng);
  detail::uniform_fill(p + hd.b3(), 1, hd.hidden2, rng);
  return h;
}

inline ModelState init_model(const ModelDims& dims, Rng& rng) {
  ModelState m;
  int prev = kFeatureDim;
  for (int w : dims.gcn_widths) {
    Eigen::MatrixXd layer(prev, w);
    // drawn row by row so the order does not depend on Eigen's storage layout
    for (int r = 0; r < prev; ++r) {
      for (int c = 0; c < w; ++c) detail::uniform_fill(&layer(r, c), 1, prev, rng);
    }
    m.gcn.layers.push_back(std::move(layer));
    prev = w;
  }
  m.agg.sum_weights = Eigen::VectorXd::Ones(prev);
  m.head = init_head(dims.head(), rng);
  return m;
}

/// H_0 = X; H_l = ReLU(A_hat H_{l-1} W_l).
inline Eigen::MatrixXd gcn_forward(const GraphTensors& t, const GcnParams& p) {
  if (!p.layers.empty() && t.feature_matrix.cols() != p.layers.front().rows()) {
    throw DomainError("feature width does not match the first GCN layer");
  }
  Eigen::MatrixXd h = t.feature_matrix;
  for (const auto& w : p.layers) {
    if (h.cols() != w.rows()) throw DomainError("GCN layer dimension mismatch");
    h = (t.normalized_adjacency * h * w).cwiseMax(0.0);
  }
  return h;
}

/// concat(sum_n a (.) H[n], max_n H[n]).
inline Eigen::VectorXd aggregate(const Eigen::MatrixXd& h, const AggParams& a) {
  if (h.rows() == 0) throw DomainError("aggregate of an empty node set");
  if (h.cols() != a.sum_weights.size()) throw DomainError("aggregation width mismatch");
  const auto c = h.cols();
  Eigen::VectorXd z(2 * c);
  z.head(c) = a.sum_weights.cwiseProduct(h.colwise().sum().transpose());
  z.tail(c) = h.colwise().maxCoeff().transpose();
  return z;
}

/// Graph tensors with feature standardization applied and A_hat X cached.
struct PreparedGraph {
  Eigen::MatrixXd adjacency;  // A_hat
  Eigen::MatrixXd ax;         // A_hat X_norm
};

inline Eigen::MatrixXd normalized_features(const GraphTensors& t, const FeatureNorm& norm) {
  Eigen::MatrixXd x = t.feature_matrix;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (!t.has_feature[i]) {
      x.row(i).setZero();
      continue;
    }
    for (int c = 0; c < kFeatureDim; ++c) x(i, c) = (x(i, c) - norm.mean[c]) / norm.std[c];
  }
  return x;
}

inline PreparedGraph prepare(const GraphTensors& t, const FeatureNorm& norm) {
  return {t.normalized_adjacency, t.normalized_adjacency * normalized_features(t, norm)};
}

inline PreparedGraph prepare(const CodeGraph& g, const FeatureNorm& norm) {
  return prepare(graph_to_tensors(g), norm);
}

/// Activations kept for the backward pass.
struct ForwardTrace {
  std::vector<Eigen::MatrixXd> inputs;  // A_hat H_{l-1} per layer
  std::vector<Eigen::MatrixXd> pre;     // before ReLU
  Eigen::MatrixXd embeddings;           // H_L
  Eigen::VectorXd z;
  std::vector<Eigen::Index> argmax;
  HeadTrace<double> head;
  double out = 0.0;
};

inline Eigen::VectorXd embed(const PreparedGraph& g, const ModelState& m, ForwardTrace* tr = nullptr) {
  Eigen::MatrixXd h;
  for (std::size_t l = 0; l < m.gcn.layers.size(); ++l) {
    Eigen::MatrixXd in = l == 0 ? g.ax : Eigen::MatrixXd(g.adjacency * h);
    if (in.cols() != m.gcn.layers[l].rows()) throw DomainError("GCN layer dimension mismatch");
    Eigen::MatrixXd pre = in * m.gcn.layers[l];
    h = pre.cwiseMax(0.0);
    if (tr != nullptr) {
      tr->inputs.push_back(std::move(in));
      tr->pre.push_back(std::move(pre));
    }
  }
  if (m.gcn.layers.empty()) h = g.ax;
  Eigen::VectorXd z = aggregate(h, m.agg);
  if (tr != nullptr) {
    tr->argmax.assign(static_cast<std::size_t>(h.cols()), 0);
    for (Eigen::Index c = 0; c < h.cols(); ++c) h.col(c).maxCoeff(&tr->argmax[c]);
    tr->embeddings = h;
    tr->z = z;
  }
  return z;
}

inline Eigen::VectorXd embed(const CodeGraph& g, const ModelState& m) {
  return embed(prepare(g, m.feature_norm), m);
}

inline double forward(const PreparedGraph& g, const ModelState& m) {
  return head_predict(m.head, embed(g, m));
}

/// Prediction on the normalized log scale.
inline double forward(const CodeGraph& g, const ModelState& m) {
  return forward(prepare(g, m.feature_norm), m);
}

inline double loss(double pred, double label_normalized) {
  const double e = pred - label_normalized;
  return e * e;
}

/// Per-sample loss and accumulated gradient (scaled by `weight`).
inline double accumulate_grad(const PreparedGraph& g, double label, const ModelState& m, GradScope scope,
                              double weight, Gradients& out) {
  ForwardTrace tr;
  const Eigen::VectorXd z = embed(g, m, &tr);
  const double pred = head_forward(m.head.dims, m.head.flat.data(), z.data(), tr.head);
  const double err = pred - label;
  const double dout = 2.0 * err * weight;

  Eigen::VectorXd dz = Eigen::VectorXd::Zero(z.size());
  head_backward(m.head.dims, m.head.flat.data(), z.data(), tr.head, dout, out.head.data(),
                scope == GradScope::kAll ? dz.data() : nullptr);
  if (scope == GradScope::kHeadOnly || m.gcn.layers.empty()) return err * err;

  const Eigen::MatrixXd& h = tr.embeddings;
  const auto c = h.cols();
  const Eigen::VectorXd dsum = dz.head(c);
  const Eigen::VectorXd dmax = dz.tail(c);
  out.agg.sum_weights += dsum.cwiseProduct(h.colwise().sum().transpose());
  Eigen::MatrixXd dh = Eigen::MatrixXd::Zero(h.rows(), c);
  dh.rowwise() += m.agg.sum_weights.cwiseProduct(dsum).transpose();
  for (Eigen::Index ch = 0; ch < c; ++ch) dh(tr.argmax[ch], ch) += dmax[ch];

  for (std::size_t l = m.gcn.layers.size(); l-- > 0;) {
    const Eigen::MatrixXd dpre = (tr.pre[l].array() > 0.0).cast<double>() * dh.array();
    out.gcn.layers[l] += tr.inputs[l].transpose() * dpre;
    if (l > 0) dh = g.adjacency.transpose() * (dpre * m.gcn.layers[l].transpose());
  }
  return err * err;
}

/// Mean squared error over the batch and its exact gradient w.r.t. `scope`.
inline std::pair<double, Gradients> grad(const ModelState& m,
                                         const std::vector<std::pair<PreparedGraph, double>>& batch,
                                         GradScope scope) {
  if (batch.empty()) throw DomainError("grad needs a non-empty batch");
  Gradients g = zero_gradients(m);
  double total = 0.0;
  const double w = 1.0 / static_cast<double>(batch.size());
  for (const auto& [graph, label] : batch) total += accumulate_grad(graph, label, m, scope, w, g);
  return {total * w, std::move(g)};
}

inline std::pair<double, Gradients> grad(const ModelState& m,
                                         const std::vector<std::pair<CodeGraph, double>>& batch,
                                         GradScope scope) {
  std::vector<std::pair<PreparedGraph, double>> prepared;
  prepared.reserve(batch.size());
  for (const auto& [g, y] : batch) prepared.emplace_back(prepare(g, m.feature_norm), y);
  return grad(m, prepared, scope);
}

inline ModelState sgd_step(ModelState m, const Gradients& g, double lr) {
  if (g.gcn.layers.size() != m.gcn.layers.size() || g.head.size() != m.head.flat.size() ||
      g.agg.sum_weights.size() != m.agg.sum_weights.size()) {
    throw DomainError("gradient shape does not match the model");
  }
  for (std::size_t l = 0; l < m.gcn.layers.size(); ++l) {
    if (g.gcn.layers[l].rows() != m.gcn.layers[l].rows() ||
        g.gcn.layers[l].cols() != m.gcn.layers[l].cols()) {
      throw DomainError("gradient shape does not match the model");
    }
    m.gcn.layers[l] -= lr * g.gcn.layers[l];
  }
  m.agg.sum_weights -= lr * g.agg.sum_weights;
  m.head.flat -= lr * g.head;
  return m;
}

inline HeadParams sgd_step(HeadParams h, const Eigen::VectorXd& g, double lr) {
  if (g.size() != h.flat.size()) throw DomainError("gradient shape does not match the head");
  h.flat -= lr * g;
  return h;
}

// ---------------------------------------------------------------------------
// Checkpoint (text, hexfloat values -> bit-exact round trip)
// ---------------------------------------------------------------------------

inline constexpr int kCheckpointVersion = 1;

namespace detail {

inline void write_hex(std::ostream& os, const double* data, std::size_t n) {
  char buf[48];
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof(buf), " %a", data[i]);
    os << buf;
  }
  os << '\n';
}

inline void read_hex(std::istream& is, double* data, std::size_t n) {
  std::string tok;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(is >> tok)) throw ConfigError("truncated checkpoint");
    char* end = nullptr;
    data[i] = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str()) throw ConfigError("bad number in checkpoint: " + tok);
  }
}

inline void expect(std::istream& is, const std::string& word) {
  std::string tok;
  if (!(is >> tok) || tok != word) throw ConfigError("checkpoint: expected '" + word + "', got '" + tok + "'");
}

}  // namespace detail

inline void save_checkpoint(std::ostream& os, const ModelState& m) {
  os << "tunegraph-checkpoint " << kCheckpointVersion << '\n';
  os << "gcn_layers " << m.gcn.layers.size() << '\n';
  for (const auto& w : m.gcn.layers) {
    os << "layer " << w.rows() << ' ' << w.cols();
    // row-major
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = w;
    detail::write_hex(os, rm.data(), static_cast<std::size_t>(rm.size()));
  }
  os << "agg " << m.agg.sum_weights.size();
  detail::write_hex(os, m.agg.sum_weights.data(), static_cast<std::size_t>(m.agg.sum_weights.size()));
  os << "head " << m.head.dims.in << ' ' << m.head.dims.hidden1 << ' ' << m.head.dims.hidden2;
  detail::write_hex(os, m.head.flat.data(), static_cast<std::size_t>(m.head.flat.size()));
  os << "feature_mean";
  detail::write_hex(os, m.feature_norm.mean.data(), kFeatureDim);
  os << "feature_std";
  detail::write_hex(os, m.feature_norm.std.data(), kFeatureDim);
  os << "label_norm";
  const double ln[2] = {m.label_norm.mean, m.label_norm.std};
  detail::write_hex(os, ln, 2);
}

inline ModelState load_checkpoint(std::istream& is) {
  ModelState m;
  detail::expect(is, "tunegraph-checkpoint");
  int version = 0;
  if (!(is >> version) || version != kCheckpointVersion) throw ConfigError("unsupported checkpoint version");
  detail::expect(is, "gcn_layers");
  std::size_t layers = 0;
  is >> layers;
  for (std::size_t l = 0; l < layers; ++l) {
    detail::expect(is, "layer");
    Eigen::Index r = 0, c = 0;
    is >> r >> c;
    if (!is || r <= 0 || c <= 0) throw ConfigError("bad layer shape in checkpoint");
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(r, c);
    detail::read_hex(is, rm.data(), static_cast<std::size_t>(rm.size()));
    m.gcn.layers.emplace_back(rm);
  }
  detail::expect(is, "agg");
  Eigen::Index n = 0;
  is >> n;
  m.agg.sum_weights.resize(n);
  detail::read_hex(is, m.agg.sum_weights.data(), static_cast<std::size_t>(n));
  detail::expect(is, "head");
  is >> m.head.dims.in >> m.head.dims.hidden1 >> m.head.dims.hidden2;
  if (!is) throw ConfigError("bad head dims in checkpoint");
  m.head.flat.resize(static_cast<Eigen::Index>(m.head.dims.num_params()));
  detail::read_hex(is, m.head.flat.data(), m.head.dims.num_params());
  detail::expect(is, "feature_mean");
  detail::read_hex(is, m.feature_norm.mean.data(), kFeatureDim);
  detail::expect(is, "feature_std");
  detail::read_hex(is, m.feature_norm.std.data(), kFeatureDim);
  detail::expect(is, "label_norm");
  double ln[2];
  detail::read_hex(is, ln, 2);
  m.label_norm = {ln[0], ln[1]};
  const auto width = m.gcn.layers.empty() ? kFeatureDim : m.gcn.layers.back().cols();
  if (m.agg.sum_weights.size() != width || m.head.dims.in != 2 * width) {
    throw ConfigError("inconsistent checkpoint dimensions");
  }
  return m;
}

inline std::string checkpoint_string(const ModelState& m) {
  std::ostringstream os;
  save_checkpoint(os, m);
  return os.str();
}

inline void save_checkpoint_file(const std::string& path, const ModelState& m) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write checkpoint " + path);
  save_checkpoint(f, m);
}

inline ModelState load_checkpoint_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read checkpoint " + path);
  return load_checkpoint(f);
}

}  // namespace tunegraph

#endif  // TUNEGRAPH_COST_MODEL_HPP_
