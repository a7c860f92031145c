#include "genctx/models/fusion.h"

#include <fmt/format.h>

namespace genctx::models {

ContextFusion::ContextFusion(ad::ParameterStore& store, const std::string& name, std::size_t d_model,
                             std::size_t d_text, std::size_t heads, std::size_t head_dim)
    : attention_(ad::AttentionParams::create(
          store, name, ad::AttentionConfig{heads, head_dim, d_model, d_text, d_model}, false, false)) {}

ad::Tensor ContextFusion::forward(const ad::Tensor& z, const ad::Tensor& context) const {
  const auto& cfg = attention_.config;
  if (z.rank() != 2 || z.dim(1) != cfg.query_dim) {
    throw ShapeError(fmt::format("fusion expects Z of shape [T x {}], got {}", cfg.query_dim,
                                 ad::shape_string(z.shape())));
  }
  ad::Tensor kv = context;
  if (context.rank() == 1) kv = ad::reshape(context, {1, context.dim(0)});
  if (kv.rank() != 2 || kv.dim(1) != cfg.kv_dim) {
    throw ShapeError(fmt::format("fusion expects context width {}, got {}", cfg.kv_dim,
                                 ad::shape_string(context.shape())));
  }
  return ad::add(ad::multi_head_attention(z, kv, attention_), z);
}

std::size_t ContextFusion::parameter_count(std::size_t d_model, std::size_t d_text, std::size_t heads,
                                           std::size_t head_dim) {
  const std::size_t inner = heads * head_dim;
  return (d_model * inner + inner) + (d_text * inner) + (d_text * inner) + (inner * d_model);
}

ContextStudent::ContextStudent(ad::ParameterStore& store, const std::string& name, std::size_t d_model,
                               std::size_t d_text)
    : proj_(ad::LinearParams::create(store, name, d_model, d_text)) {}

ad::Tensor ContextStudent::forward(const ad::Tensor& z) const {
  if (z.rank() != 2 || z.dim(1) != proj_.in_dim()) {
    throw ShapeError(fmt::format("student expects Z of shape [T x {}], got {}", proj_.in_dim(),
                                 ad::shape_string(z.shape())));
  }
  return ad::linear(ad::mean_pool(z), proj_);
}

}  // namespace genctx::models
