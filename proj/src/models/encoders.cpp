#include "genctx/models/encoders.h"

#include <fmt/format.h>

namespace genctx::models {

namespace {

std::vector<ad::TransformerLayerParams> make_layers(ad::ParameterStore& store, const std::string& name,
                                                    const EncoderShape& s) {
  std::vector<ad::TransformerLayerParams> layers;
  for (std::size_t l = 0; l < s.layers; ++l) {
    layers.push_back(ad::TransformerLayerParams::create(store, fmt::format("{}.layer{}", name, l), s.width,
                                                        s.heads, s.head_dim, s.ffn_mult * s.width, s.identity_init));
  }
  return layers;
}

}  // namespace

AcousticEncoder::AcousticEncoder(ad::ParameterStore& store, const std::string& name, const EncoderShape& shape)
    : input_(ad::LinearParams::create(store, name + ".input", shape.input_dim, shape.width)),
      layers_(make_layers(store, name, shape)) {}

ad::Tensor AcousticEncoder::forward(const ad::Tensor& features) const {
  if (features.rank() != 2 || features.dim(1) != input_dim() || features.dim(0) == 0) {
    throw ShapeError(fmt::format("acoustic encoder expects [T x {}] with T >= 1, got {}", input_dim(),
                                 ad::shape_string(features.shape())));
  }
  ad::Tensor h = ad::linear(features, input_);
  for (const auto& layer : layers_) h = ad::transformer_layer(h, layer);
  return h;
}

TextEncoder::TextEncoder(ad::ParameterStore& store, const std::string& name, const EncoderShape& shape,
                         int cls_id)
    : table_(store.uniform(name + ".embedding", {shape.input_dim, shape.width}, 1)),
      layers_(make_layers(store, name, shape)),
      cls_id_(cls_id) {}

TextEncoding TextEncoder::forward(std::span<const int> ids) const {
  std::vector<int> with_cls;
  with_cls.reserve(ids.size() + 1);
  with_cls.push_back(cls_id_);
  with_cls.insert(with_cls.end(), ids.begin(), ids.end());
  ad::Tensor h = ad::embed_tokens(with_cls, table_);
  for (const auto& layer : layers_) h = ad::transformer_layer(h, layer);
  return {ad::row(h, 0), h};
}

}  // namespace genctx::models
