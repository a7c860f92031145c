#pragma once

#include <string>

#include "genctx/autodiff/nn.h"

namespace genctx::models {

/// Z~ = CA(Z, e) + Z, queries from frames, keys/values from the context.
/// Value and output projections are bias-free, so CA(Z, 0) = 0.
class ContextFusion {
 public:
  ContextFusion(ad::ParameterStore& store, const std::string& name, std::size_t d_model, std::size_t d_text,
                std::size_t heads = 1, std::size_t head_dim = 32);

  /// `context` is a vector [d_text] (one key/value) or a sequence [L x d_text].
  ad::Tensor forward(const ad::Tensor& z, const ad::Tensor& context) const;
  const ad::AttentionParams& attention() const { return attention_; }
  /// Parameter count for the given shapes.
  static std::size_t parameter_count(std::size_t d_model, std::size_t d_text, std::size_t heads,
                                     std::size_t head_dim);

 private:
  ad::AttentionParams attention_;
};

/// e^ = W mean_pool(Z) + b
class ContextStudent {
 public:
  ContextStudent(ad::ParameterStore& store, const std::string& name, std::size_t d_model, std::size_t d_text);

  /// Throws ShapeError when Z has no frames or the wrong width.
  ad::Tensor forward(const ad::Tensor& z) const;
  static std::size_t parameter_count(std::size_t d_model, std::size_t d_text) { return d_model * d_text + d_text; }

 private:
  ad::LinearParams proj_;
};

}  // namespace genctx::models
