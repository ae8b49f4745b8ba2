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

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "phydcm/preprocess.hpp"
#include "phydcm/tensor.hpp"

namespace phydcm::nnet {

// ---------------------------------------------------------------------------
// Primitive ops. All accumulate in double and round to float once per output
// element.

/// 3x3 convolution with zero padding. weight [c_out, c_in, 3, 3], bias [c_out].
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride,
              int pad = 1);

void relu_inplace(Tensor& t) noexcept;

/// x [n, in] times w [in, out] plus b [out].
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

/// Tanh approximation.
double gelu(double x) noexcept;

/// Max-subtracted softmax over a 1-D tensor.
Tensor softmax(const Tensor& logits);

struct AttentionWeights {
  const Tensor& q_w;
  const Tensor& q_b;
  const Tensor& k_w;
  const Tensor& k_b;
  const Tensor& v_w;
  const Tensor& v_b;
  const Tensor& o_w;
  const Tensor& o_b;
};

/// Single-head scaled dot-product self-attention with output projection.
/// When `attention_matrix` is non-null it receives the [n, n] row-softmax.
Tensor attention(const Tensor& tokens, const AttentionWeights& w,
                 Tensor* attention_matrix = nullptr);

// ---------------------------------------------------------------------------
// Model schedule ("MedViT-lite v1").

inline constexpr std::size_t kInputSize = 224;
inline constexpr std::size_t kEmbedDim = 32;
inline constexpr std::size_t kMlpDim = 64;
inline constexpr std::size_t kNumClasses = 4;
inline constexpr std::size_t kTokenGrid = 14;

struct ParamSpec {
  std::string name;
  Shape shape;
};

/// Parameter names and shapes in their fixed file order.
const std::vector<ParamSpec>& model_params();

/// Named tensors in ModelSpec order.
class WeightTable {
 public:
  void add(std::string name, Tensor tensor);

  const Tensor* find(std::string_view name) const;
  /// Throws WeightsMissing.
  const Tensor& at(std::string_view name) const;

  std::size_t size() const noexcept { return entries_.size(); }
  const std::vector<std::pair<std::string, Tensor>>& entries() const noexcept { return entries_; }

  friend bool operator==(const WeightTable&, const WeightTable&) = default;

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

/// Throws SchemaMismatch naming the first tensor that deviates from
/// model_params() in name, order or shape.
void validate_weights(const WeightTable& weights);

/// Uniform [-0.05, 0.05) weights from SplitMix64(seed), one draw per scalar
/// in parameter order; layer-norm gains are then set to 1 and offsets to 0.
WeightTable gen_fixture_weights(std::uint64_t seed);

/// Intermediate shapes and attention matrices captured by forward().
struct ForwardTrace {
  std::vector<std::pair<std::string, Shape>> shapes;
  std::vector<Tensor> attention;
  Tensor logits;
};

/// Runs the full schedule on a [1, 224, 224] input and returns 4
/// probabilities. Throws ShapeMismatch or WeightsMissing.
Tensor forward(const WeightTable& weights, const Tensor& input, ForwardTrace* trace = nullptr);
Tensor forward(const WeightTable& weights, const preprocess::ImageTensor& input,
               ForwardTrace* trace = nullptr);

}  // namespace phydcm::nnet
