// Copyright 2026 The PhyDCM Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "phydcm/nnet.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "phydcm/error.hpp"
#include "phydcm/random.hpp"

namespace phydcm::nnet {
namespace {

[[noreturn]] void shape_error(const std::string& what) {
  throw Error(ErrorCode::ShapeMismatch, what);
}

void expect_shape(const Tensor& t, const Shape& shape, const char* what) {
  if (t.shape != shape || t.data.size() != shape_size(shape))
    shape_error(std::string(what) + ": expected " + shape_str(shape) + ", got " +
                shape_str(t.shape));
}

void add_inplace(Tensor& x, const Tensor& y) {
  if (x.shape != y.shape) shape_error("residual add: " + shape_str(x.shape) + " vs " + shape_str(y.shape));
  for (std::size_t i = 0; i < x.data.size(); ++i)
    x.data[i] = static_cast<float>(static_cast<double>(x.data[i]) + static_cast<double>(y.data[i]));
}

bool is_layer_norm_param(std::string_view name, char kind) {
  const std::string g1 = std::string(".ln1.") + kind;
  const std::string g2 = std::string(".ln2.") + kind;
  return name.ends_with(g1) || name.ends_with(g2);
}

}  // namespace

std::string shape_str(std::span<const std::size_t> shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride, int pad) {
  if (input.rank() != 3) shape_error("conv2d input must be [c,h,w], got " + shape_str(input.shape));
  if (weight.rank() != 4 || weight.dim(2) != 3 || weight.dim(3) != 3)
    shape_error("conv2d weight must be [c_out,c_in,3,3], got " + shape_str(weight.shape));
  if (weight.dim(1) != input.dim(0))
    shape_error("conv2d channel mismatch: input " + shape_str(input.shape) + ", weight " +
                shape_str(weight.shape));
  if (bias.rank() != 1 || bias.dim(0) != weight.dim(0))
    shape_error("conv2d bias must be [c_out], got " + shape_str(bias.shape));
  if (stride != 1 && stride != 2) shape_error("conv2d stride must be 1 or 2");
  if (pad < 0) shape_error("conv2d padding must be non-negative");

  const std::size_t c_in = input.dim(0), h = input.dim(1), w = input.dim(2);
  const std::size_t c_out = weight.dim(0);
  const long long ih = static_cast<long long>(h), iw = static_cast<long long>(w);
  if (ih + 2 * pad < 3 || iw + 2 * pad < 3) shape_error("conv2d input smaller than kernel");
  const std::size_t oh = static_cast<std::size_t>((ih + 2 * pad - 3) / stride + 1);
  const std::size_t ow = static_cast<std::size_t>((iw + 2 * pad - 3) / stride + 1);

  Tensor out({c_out, oh, ow});
  std::vector<double> acc(oh * ow);
  for (std::size_t o = 0; o < c_out; ++o) {
    std::fill(acc.begin(), acc.end(), static_cast<double>(bias.data[o]));
    // Summation order per output element is (c, dy, dx), same as the direct formula.
    for (std::size_t c = 0; c < c_in; ++c) {
      const float* plane = input.data.data() + c * h * w;
      for (int dy = 0; dy < 3; ++dy) {
        for (int dx = 0; dx < 3; ++dx) {
          const double k = weight.data[((o * c_in + c) * 3 + static_cast<std::size_t>(dy)) * 3 +
                                       static_cast<std::size_t>(dx)];
          for (std::size_t i = 0; i < oh; ++i) {
            const long long y = static_cast<long long>(i) * stride + dy - pad;
            if (y < 0 || y >= ih) continue;
            const float* row = plane + static_cast<std::size_t>(y) * w;
            double* acc_row = acc.data() + i * ow;
            for (std::size_t j = 0; j < ow; ++j) {
              const long long x = static_cast<long long>(j) * stride + dx - pad;
              if (x < 0 || x >= iw) continue;
              acc_row[j] += static_cast<double>(row[x]) * k;
            }
          }
        }
      }
    }
    float* dst = out.data.data() + o * oh * ow;
    for (std::size_t i = 0; i < oh * ow; ++i) dst[i] = static_cast<float>(acc[i]);
  }
  return out;
}

void relu_inplace(Tensor& t) noexcept {
  for (auto& v : t.data) v = v > 0.0f ? v : 0.0f;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.rank() != 2 || w.rank() != 2 || b.rank() != 1 || w.dim(0) != x.dim(1) ||
      b.dim(0) != w.dim(1))
    shape_error("linear: x " + shape_str(x.shape) + ", w " + shape_str(w.shape) + ", b " +
                shape_str(b.shape));
  const std::size_t n = x.dim(0), in = w.dim(0), out_dim = w.dim(1);
  Tensor out({n, out_dim});
  std::vector<double> acc(out_dim);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < out_dim; ++j) acc[j] = b.data[j];
    for (std::size_t i = 0; i < in; ++i) {
      const double xv = x.data[r * in + i];
      const float* wrow = w.data.data() + i * out_dim;
      for (std::size_t j = 0; j < out_dim; ++j) acc[j] += xv * static_cast<double>(wrow[j]);
    }
    for (std::size_t j = 0; j < out_dim; ++j) out.data[r * out_dim + j] = static_cast<float>(acc[j]);
  }
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  if (x.rank() != 2) shape_error("layer_norm input must be [n,d], got " + shape_str(x.shape));
  const std::size_t n = x.dim(0), d = x.dim(1);
  if (gamma.shape != Shape{d} || beta.shape != Shape{d})
    shape_error("layer_norm gamma/beta must be [" + std::to_string(d) + "]");
  Tensor out(x.shape);
  for (std::size_t r = 0; r < n; ++r) {
    const float* row = x.data.data() + r * d;
    double mean = 0.0;
    for (std::size_t i = 0; i < d; ++i) mean += row[i];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double delta = row[i] - mean;
      var += delta * delta;
    }
    var /= static_cast<double>(d);
    const double inv_std = 1.0 / std::sqrt(var + eps);
    for (std::size_t i = 0; i < d; ++i)
      out.data[r * d + i] = static_cast<float>(static_cast<double>(gamma.data[i]) * (row[i] - mean) * inv_std +
                                               static_cast<double>(beta.data[i]));
  }
  return out;
}

double gelu(double x) noexcept {
  const double k = std::sqrt(2.0 / std::numbers::pi);
  return 0.5 * x * (1.0 + std::tanh(k * (x + 0.044715 * x * x * x)));
}

Tensor softmax(const Tensor& logits) {
  if (logits.rank() != 1 || logits.size() == 0) shape_error("softmax expects a non-empty vector");
  const double max = *std::max_element(logits.data.begin(), logits.data.end());
  std::vector<double> e(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    e[i] = std::exp(static_cast<double>(logits.data[i]) - max);
    sum += e[i];
  }
  Tensor out(logits.shape);
  for (std::size_t i = 0; i < e.size(); ++i) out.data[i] = static_cast<float>(e[i] / sum);
  return out;
}

Tensor attention(const Tensor& tokens, const AttentionWeights& w, Tensor* attention_matrix) {
  if (tokens.rank() != 2 || tokens.dim(0) == 0)
    shape_error("attention expects [n,d] tokens, got " + shape_str(tokens.shape));
  const std::size_t n = tokens.dim(0), d = tokens.dim(1);
  const Shape square{d, d}, vec{d};
  expect_shape(w.q_w, square, "attention q.w");
  expect_shape(w.k_w, square, "attention k.w");
  expect_shape(w.v_w, square, "attention v.w");
  expect_shape(w.o_w, square, "attention o.w");
  expect_shape(w.q_b, vec, "attention q.b");
  expect_shape(w.k_b, vec, "attention k.b");
  expect_shape(w.v_b, vec, "attention v.b");
  expect_shape(w.o_b, vec, "attention o.b");

  const Tensor q = linear(tokens, w.q_w, w.q_b);
  const Tensor k = linear(tokens, w.k_w, w.k_b);
  const Tensor v = linear(tokens, w.v_w, w.v_b);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));

  Tensor a({n, n});
  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) {
    const float* qi = q.data.data() + i * d;
    double max = -INFINITY;
    for (std::size_t j = 0; j < n; ++j) {
      const float* kj = k.data.data() + j * d;
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += static_cast<double>(qi[c]) * static_cast<double>(kj[c]);
      scores[j] = s * scale;
      max = std::max(max, scores[j]);
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      scores[j] = std::exp(scores[j] - max);
      sum += scores[j];
    }
    for (std::size_t j = 0; j < n; ++j) a.data[i * n + j] = static_cast<float>(scores[j] / sum);
  }

  Tensor context({n, d});
  std::vector<double> acc(d);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double aij = a.data[i * n + j];
      const float* vj = v.data.data() + j * d;
      for (std::size_t c = 0; c < d; ++c) acc[c] += aij * static_cast<double>(vj[c]);
    }
    for (std::size_t c = 0; c < d; ++c) context.data[i * d + c] = static_cast<float>(acc[c]);
  }
  if (attention_matrix) *attention_matrix = a;
  return linear(context, w.o_w, w.o_b);
}

const std::vector<ParamSpec>& model_params() {
  static const std::vector<ParamSpec> kParams = [] {
    std::vector<ParamSpec> p;
    auto conv = [&](const std::string& name, std::size_t out, std::size_t in) {
      p.push_back({name + ".w", {out, in, 3, 3}});
      p.push_back({name + ".b", {out}});
    };
    conv("stem", 8, 1);
    conv("down1", 16, 8);
    for (const char* block : {"res1", "res2"}) {
      conv(std::string(block) + ".c1", 16, 16);
      conv(std::string(block) + ".c2", 16, 16);
    }
    conv("down2", 32, 16);
    conv("down3", 32, 32);
    const std::size_t d = kEmbedDim;
    for (const char* tb : {"tb1", "tb2"}) {
      const std::string b = tb;
      p.push_back({b + ".ln1.g", {d}});
      p.push_back({b + ".ln1.b", {d}});
      for (const char* proj : {"q", "k", "v", "o"}) {
        p.push_back({b + "." + proj + ".w", {d, d}});
        p.push_back({b + "." + proj + ".b", {d}});
      }
      p.push_back({b + ".ln2.g", {d}});
      p.push_back({b + ".ln2.b", {d}});
      p.push_back({b + ".mlp.fc1.w", {d, kMlpDim}});
      p.push_back({b + ".mlp.fc1.b", {kMlpDim}});
      p.push_back({b + ".mlp.fc2.w", {kMlpDim, d}});
      p.push_back({b + ".mlp.fc2.b", {d}});
    }
    p.push_back({"head.w", {d, kNumClasses}});
    p.push_back({"head.b", {kNumClasses}});
    return p;
  }();
  return kParams;
}

void WeightTable::add(std::string name, Tensor tensor) {
  entries_.emplace_back(std::move(name), std::move(tensor));
}

const Tensor* WeightTable::find(std::string_view name) const {
  for (const auto& [n, t] : entries_)
    if (n == name) return &t;
  return nullptr;
}

const Tensor& WeightTable::at(std::string_view name) const {
  if (const auto* t = find(name)) return *t;
  throw Error(ErrorCode::WeightsMissing, "weight tensor '" + std::string(name) + "' is missing");
}

void validate_weights(const WeightTable& weights) {
  const auto& spec = model_params();
  const auto& entries = weights.entries();
  for (std::size_t i = 0; i < spec.size(); ++i) {
    if (i >= entries.size())
      throw Error(ErrorCode::SchemaMismatch, spec[i].name + ": missing from weight table");
    const auto& [name, tensor] = entries[i];
    if (name != spec[i].name)
      throw Error(ErrorCode::SchemaMismatch,
                  name + ": expected tensor '" + spec[i].name + "' at position " + std::to_string(i));
    if (tensor.shape != spec[i].shape || tensor.data.size() != shape_size(spec[i].shape))
      throw Error(ErrorCode::SchemaMismatch, name + ": shape " + shape_str(tensor.shape) +
                                                 " does not match " + shape_str(spec[i].shape));
  }
  if (entries.size() > spec.size())
    throw Error(ErrorCode::SchemaMismatch, entries[spec.size()].first + ": unexpected extra tensor");
}

WeightTable gen_fixture_weights(std::uint64_t seed) {
  SplitMix64 rng(seed);
  WeightTable table;
  for (const auto& p : model_params()) {
    Tensor t(p.shape);
    for (auto& v : t.data) v = static_cast<float>(-0.05 + 0.1 * rng.next_unit());
    if (is_layer_norm_param(p.name, 'g')) std::fill(t.data.begin(), t.data.end(), 1.0f);
    if (is_layer_norm_param(p.name, 'b')) std::fill(t.data.begin(), t.data.end(), 0.0f);
    table.add(p.name, std::move(t));
  }
  return table;
}

namespace {

Tensor conv_block(const WeightTable& w, const std::string& name, const Tensor& x, int stride) {
  return conv2d(x, w.at(name + ".w"), w.at(name + ".b"), stride);
}

void record(ForwardTrace* trace, std::string name, const Tensor& t) {
  if (trace) trace->shapes.emplace_back(std::move(name), t.shape);
}

Tensor transformer_block(const WeightTable& w, const std::string& b, Tensor x,
                         ForwardTrace* trace) {
  const Tensor normed = layer_norm(x, w.at(b + ".ln1.g"), w.at(b + ".ln1.b"));
  Tensor attn_matrix;
  const Tensor attn = attention(normed,
                                {w.at(b + ".q.w"), w.at(b + ".q.b"), w.at(b + ".k.w"),
                                 w.at(b + ".k.b"), w.at(b + ".v.w"), w.at(b + ".v.b"),
                                 w.at(b + ".o.w"), w.at(b + ".o.b")},
                                trace ? &attn_matrix : nullptr);
  if (trace) trace->attention.push_back(std::move(attn_matrix));
  add_inplace(x, attn);

  const Tensor normed2 = layer_norm(x, w.at(b + ".ln2.g"), w.at(b + ".ln2.b"));
  Tensor hidden = linear(normed2, w.at(b + ".mlp.fc1.w"), w.at(b + ".mlp.fc1.b"));
  for (auto& v : hidden.data) v = static_cast<float>(gelu(v));
  const Tensor mlp = linear(hidden, w.at(b + ".mlp.fc2.w"), w.at(b + ".mlp.fc2.b"));
  add_inplace(x, mlp);
  return x;
}

}  // namespace

Tensor forward(const WeightTable& w, const Tensor& input, ForwardTrace* trace) {
  expect_shape(input, Shape{1, kInputSize, kInputSize}, "model input");
  record(trace, "input", input);

  Tensor x = conv_block(w, "stem", input, 2);
  relu_inplace(x);
  record(trace, "stem", x);
  x = conv_block(w, "down1", x, 2);
  relu_inplace(x);
  record(trace, "down1", x);

  for (const char* block : {"res1", "res2"}) {
    const std::string b = block;
    Tensor h = conv_block(w, b + ".c1", x, 1);
    relu_inplace(h);
    h = conv_block(w, b + ".c2", h, 1);
    add_inplace(h, x);
    relu_inplace(h);
    x = std::move(h);
    record(trace, b, x);
  }

  x = conv_block(w, "down2", x, 2);
  relu_inplace(x);
  record(trace, "down2", x);
  x = conv_block(w, "down3", x, 2);
  relu_inplace(x);
  record(trace, "down3", x);
  expect_shape(x, Shape{kEmbedDim, kTokenGrid, kTokenGrid}, "feature map");

  // [c][i][j] -> token (i*14 + j), feature c.
  const std::size_t n_tokens = kTokenGrid * kTokenGrid;
  Tensor tokens({n_tokens, kEmbedDim});
  for (std::size_t c = 0; c < kEmbedDim; ++c)
    for (std::size_t t = 0; t < n_tokens; ++t)
      tokens.data[t * kEmbedDim + c] = x.data[c * n_tokens + t];
  record(trace, "tokens", tokens);

  tokens = transformer_block(w, "tb1", std::move(tokens), trace);
  record(trace, "tb1", tokens);
  tokens = transformer_block(w, "tb2", std::move(tokens), trace);
  record(trace, "tb2", tokens);

  Tensor pooled({1, kEmbedDim});
  for (std::size_t c = 0; c < kEmbedDim; ++c) {
    double sum = 0.0;
    for (std::size_t t = 0; t < n_tokens; ++t) sum += tokens.data[t * kEmbedDim + c];
    pooled.data[c] = static_cast<float>(sum / static_cast<double>(n_tokens));
  }
  if (trace) trace->shapes.emplace_back("pool", Shape{kEmbedDim});

  Tensor logits = linear(pooled, w.at("head.w"), w.at("head.b"));
  logits.shape = {kNumClasses};
  record(trace, "logits", logits);
  Tensor probs = softmax(logits);
  record(trace, "probs", probs);
  if (trace) trace->logits = std::move(logits);
  return probs;
}

Tensor forward(const WeightTable& weights, const preprocess::ImageTensor& input,
               ForwardTrace* trace) {
  Tensor t({input.channels, input.height, input.width}, input.data);
  if (t.data.size() != shape_size(t.shape)) shape_error("image tensor data length mismatch");
  return forward(weights, t, trace);
}

}  // namespace phydcm::nnet
