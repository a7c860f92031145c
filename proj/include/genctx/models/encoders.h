#pragma once

#include <span>
#include <string>
#include <vector>

#include "genctx/autodiff/nn.h"

namespace genctx::models {

struct EncoderShape {
  std::size_t input_dim = 16;   // d_feat for audio, vocabulary size for text
  std::size_t width = 64;       // d_model / d_text
  std::size_t layers = 2;
  std::size_t heads = 2;
  std::size_t head_dim = 32;
  std::size_t ffn_mult = 4;
  bool identity_init = true;  // layers start as the identity map
};

/// Input projection then pre-norm transformer layers; length-preserving.
class AcousticEncoder {
 public:
  AcousticEncoder(ad::ParameterStore& store, const std::string& name, const EncoderShape& shape);

  /// [T x d_feat] -> [T x d_model]. Throws ShapeError on a width mismatch or T = 0.
  ad::Tensor forward(const ad::Tensor& features) const;
  std::size_t input_dim() const { return input_.in_dim(); }
  std::size_t width() const { return input_.out_dim(); }

 private:
  ad::LinearParams input_;
  std::vector<ad::TransformerLayerParams> layers_;
};

struct TextEncoding {
  ad::Tensor cls;       // [d_text], last-layer state of the classification token
  ad::Tensor sequence;  // [(L+1) x d_text], classification token first
};

/// Token table plus transformer layers; a reserved classification token is
/// prepended to every input.
class TextEncoder {
 public:
  TextEncoder(ad::ParameterStore& store, const std::string& name, const EncoderShape& shape,
              int cls_id = 0);

  /// Throws std::out_of_range on an id outside the vocabulary.
  TextEncoding forward(std::span<const int> ids) const;
  std::size_t vocab_size() const { return table_.dim(0); }
  std::size_t width() const { return table_.dim(1); }

 private:
  ad::Tensor table_;
  std::vector<ad::TransformerLayerParams> layers_;
  int cls_id_;
};

}  // namespace genctx::models
