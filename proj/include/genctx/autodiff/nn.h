#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "genctx/autodiff/ops.h"
#include "genctx/autodiff/tensor.h"

namespace genctx::ad {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

/// Owns the named trainable tensors of one model.
///
/// Each parameter is drawn from its own generator seeded by (seed, name),
/// so adding or reordering parameters never changes the others.
class ParameterStore {
 public:
  explicit ParameterStore(std::uint64_t seed) : seed_(seed) {}

  /// uniform(-1/sqrt(fan_in), +1/sqrt(fan_in))
  Tensor uniform(const std::string& name, Shape shape, std::size_t fan_in);
  Tensor constant(const std::string& name, Shape shape, double value);

  const std::vector<NamedTensor>& parameters() const { return params_; }
  std::vector<Tensor> tensors() const;
  /// Parameters whose names start with `prefix`.
  std::vector<NamedTensor> with_prefix(const std::string& prefix) const;
  std::size_t count(const std::string& prefix = "") const;
  Tensor find(const std::string& name) const;
  bool contains(const std::string& name) const;
  void zero_grad();
  std::uint64_t seed() const { return seed_; }

 private:
  Tensor add(const std::string& name, Tensor t);
  std::uint64_t seed_;
  std::vector<NamedTensor> params_;
};

struct LinearParams {
  Tensor weight;  // [out x in]
  Tensor bias;    // [out], undefined for a bias-free projection

  static LinearParams create(ParameterStore& store, const std::string& name, std::size_t in,
                             std::size_t out, bool zero_init = false);
  static LinearParams create_no_bias(ParameterStore& store, const std::string& name,
                                     std::size_t in, std::size_t out);
  std::size_t in_dim() const { return weight.dim(1); }
  std::size_t out_dim() const { return weight.dim(0); }
};

Tensor linear(const Tensor& x, const LinearParams& p);

struct LayerNormParams {
  Tensor gamma;
  Tensor beta;

  static LayerNormParams create(ParameterStore& store, const std::string& name, std::size_t dim);
};

inline Tensor layer_norm(const Tensor& x, const LayerNormParams& p, double eps = 1e-5) {
  return layer_norm(x, p.gamma, p.beta, eps);
}

struct AttentionConfig {
  std::size_t num_heads = 1;
  std::size_t head_dim = 32;
  std::size_t query_dim = 0;
  std::size_t kv_dim = 0;
  std::size_t out_dim = 0;

  std::size_t inner_dim() const { return num_heads * head_dim; }
};

struct AttentionParams {
  AttentionConfig config;
  LinearParams query;   // query_dim -> inner
  LinearParams key;     // kv_dim -> inner, no bias (softmax would cancel it)
  LinearParams value;   // kv_dim -> inner
  LinearParams output;  // inner -> out_dim

  /// Without `value_output_bias` a zero value projection makes the block
  /// output exactly zero, and so does an all-zero key/value input.
  static AttentionParams create(ParameterStore& store, const std::string& name,
                                const AttentionConfig& config, bool zero_output = false,
                                bool value_output_bias = true);
};

/// Scaled dot-product attention, heads concatenated, then the output projection.
/// Queries come from `q_src` [Tq x query_dim], keys/values from `kv_src` [Tk x kv_dim].
Tensor multi_head_attention(const Tensor& q_src, const Tensor& kv_src,
                            const AttentionParams& params);

struct TransformerLayerParams {
  LayerNormParams norm1;
  AttentionParams attention;
  LayerNormParams norm2;
  LinearParams ffn_in;
  LinearParams ffn_out;

  /// With `identity_init` the attention output and second FFN projection
  /// start at zero, so a fresh layer is exactly the identity map.
  static TransformerLayerParams create(ParameterStore& store, const std::string& name,
                                       std::size_t width, std::size_t num_heads,
                                       std::size_t head_dim, std::size_t ffn_width,
                                       bool identity_init = true);
  std::size_t width() const { return norm1.gamma.dim(0); }
};

/// Pre-norm residual block: h = x + Attn(LN(x)); y = h + FFN(LN(h)).
Tensor transformer_layer(const Tensor& x, const TransformerLayerParams& params);

}  // namespace genctx::ad
