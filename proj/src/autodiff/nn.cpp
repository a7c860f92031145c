#include "genctx/autodiff/nn.h"

#include <fmt/format.h>

#include <cmath>

#include "genctx/autodiff/rng.h"

namespace genctx::ad {

Tensor ParameterStore::add(const std::string& name, Tensor t) {
  if (contains(name)) throw std::invalid_argument(fmt::format("duplicate parameter '{}'", name));
  params_.push_back({name, t});
  return t;
}

Tensor ParameterStore::uniform(const std::string& name, Shape shape, std::size_t fan_in) {
  Rng rng(mix_seed(seed_, stable_hash(name)));
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<double> values(shape_numel(shape));
  for (double& v : values) v = rng.uniform(-bound, bound);
  return add(name, Tensor(std::move(shape), std::move(values), true));
}

Tensor ParameterStore::constant(const std::string& name, Shape shape, double value) {
  return add(name, Tensor::filled(std::move(shape), value, true));
}

std::vector<Tensor> ParameterStore::tensors() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.tensor);
  return out;
}

std::vector<NamedTensor> ParameterStore::with_prefix(const std::string& prefix) const {
  std::vector<NamedTensor> out;
  for (const auto& p : params_) {
    if (p.name.starts_with(prefix)) out.push_back(p);
  }
  return out;
}

std::size_t ParameterStore::count(const std::string& prefix) const {
  std::size_t n = 0;
  for (const auto& p : params_) {
    if (p.name.starts_with(prefix)) n += p.tensor.numel();
  }
  return n;
}

Tensor ParameterStore::find(const std::string& name) const {
  for (const auto& p : params_) {
    if (p.name == name) return p.tensor;
  }
  throw std::out_of_range(fmt::format("no parameter named '{}'", name));
}

bool ParameterStore::contains(const std::string& name) const {
  for (const auto& p : params_) {
    if (p.name == name) return true;
  }
  return false;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

LinearParams LinearParams::create(ParameterStore& store, const std::string& name, std::size_t in,
                                  std::size_t out, bool zero_init) {
  if (zero_init) {
    return {store.constant(name + ".weight", {out, in}, 0.0),
            store.constant(name + ".bias", {out}, 0.0)};
  }
  return {store.uniform(name + ".weight", {out, in}, in), store.uniform(name + ".bias", {out}, in)};
}

LinearParams LinearParams::create_no_bias(ParameterStore& store, const std::string& name,
                                          std::size_t in, std::size_t out) {
  return {store.uniform(name + ".weight", {out, in}, in), Tensor()};
}

Tensor linear(const Tensor& x, const LinearParams& p) {
  if (p.bias.defined()) return linear(x, p.weight, p.bias);
  if (x.rank() == 1) return reshape(matmul(reshape(x, {1, x.dim(0)}), transpose(p.weight)), {p.out_dim()});
  return matmul(x, transpose(p.weight));
}

LayerNormParams LayerNormParams::create(ParameterStore& store, const std::string& name,
                                        std::size_t dim) {
  return {store.constant(name + ".gamma", {dim}, 1.0), store.constant(name + ".beta", {dim}, 0.0)};
}

AttentionParams AttentionParams::create(ParameterStore& store, const std::string& name,
                                        const AttentionConfig& config, bool zero_output,
                                        bool value_output_bias) {
  if (config.num_heads == 0 || config.head_dim == 0 || config.query_dim == 0 ||
      config.kv_dim == 0 || config.out_dim == 0) {
    throw std::invalid_argument("attention config dimensions must be positive");
  }
  const std::size_t inner = config.inner_dim();
  AttentionParams p;
  p.config = config;
  p.query = LinearParams::create(store, name + ".query", config.query_dim, inner);
  p.key = LinearParams::create_no_bias(store, name + ".key", config.kv_dim, inner);
  if (value_output_bias) {
    p.value = LinearParams::create(store, name + ".value", config.kv_dim, inner);
    p.output = LinearParams::create(store, name + ".output", inner, config.out_dim, zero_output);
  } else {
    if (zero_output) throw std::invalid_argument("zero_output needs the output bias");
    p.value = LinearParams::create_no_bias(store, name + ".value", config.kv_dim, inner);
    p.output = LinearParams::create_no_bias(store, name + ".output", inner, config.out_dim);
  }
  return p;
}

Tensor multi_head_attention(const Tensor& q_src, const Tensor& kv_src,
                            const AttentionParams& params) {
  const AttentionConfig& cfg = params.config;
  if (q_src.rank() != 2 || kv_src.rank() != 2) {
    throw ShapeError(fmt::format("attention expects rank-2 inputs, got {} and {}",
                                 shape_string(q_src.shape()), shape_string(kv_src.shape())));
  }
  if (kv_src.dim(0) == 0) throw ShapeError("attention over an empty key/value sequence");
  if (q_src.dim(1) != cfg.query_dim || kv_src.dim(1) != cfg.kv_dim) {
    throw ShapeError(fmt::format("attention inputs {} / {} do not match config ({}, {})",
                                 shape_string(q_src.shape()), shape_string(kv_src.shape()),
                                 cfg.query_dim, cfg.kv_dim));
  }
  const Tensor q = linear(q_src, params.query);
  const Tensor k = linear(kv_src, params.key);
  const Tensor v = linear(kv_src, params.value);
  const double scale_factor = 1.0 / std::sqrt(static_cast<double>(cfg.head_dim));

  auto head = [&](const Tensor& qh, const Tensor& kh, const Tensor& vh) {
    const Tensor scores = scale(matmul(qh, transpose(kh)), scale_factor);
    return matmul(softmax(scores, 1), vh);
  };

  Tensor merged;
  if (cfg.num_heads == 1) {
    merged = head(q, k, v);
  } else {
    std::vector<Tensor> heads;
    heads.reserve(cfg.num_heads);
    for (std::size_t h = 0; h < cfg.num_heads; ++h) {
      const std::size_t b = h * cfg.head_dim, e = b + cfg.head_dim;
      heads.push_back(head(slice_cols(q, b, e), slice_cols(k, b, e), slice_cols(v, b, e)));
    }
    merged = concat_cols(heads);
  }
  return linear(merged, params.output);
}

TransformerLayerParams TransformerLayerParams::create(ParameterStore& store,
                                                      const std::string& name, std::size_t width,
                                                      std::size_t num_heads, std::size_t head_dim,
                                                      std::size_t ffn_width, bool identity_init) {
  TransformerLayerParams p;
  p.norm1 = LayerNormParams::create(store, name + ".norm1", width);
  p.attention = AttentionParams::create(store, name + ".attn",
                                        {num_heads, head_dim, width, width, width}, identity_init);
  p.norm2 = LayerNormParams::create(store, name + ".norm2", width);
  p.ffn_in = LinearParams::create(store, name + ".ffn_in", width, ffn_width);
  p.ffn_out = LinearParams::create(store, name + ".ffn_out", ffn_width, width, identity_init);
  return p;
}

Tensor transformer_layer(const Tensor& x, const TransformerLayerParams& params) {
  if (x.rank() != 2 || x.dim(1) != params.width()) {
    throw ShapeError(fmt::format("transformer layer of width {} got input {}", params.width(),
                                 shape_string(x.shape())));
  }
  const Tensor normed = layer_norm(x, params.norm1);
  const Tensor h = add(x, multi_head_attention(normed, normed, params.attention));
  const Tensor ffn = linear(gelu(linear(layer_norm(h, params.norm2), params.ffn_in)), params.ffn_out);
  return add(h, ffn);
}

}  // namespace genctx::ad
