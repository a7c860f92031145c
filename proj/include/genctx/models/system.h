#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "genctx/autodiff/checkpoint.h"
#include "genctx/models/encoders.h"
#include "genctx/models/fusion.h"
#include "genctx/models/tokenizer.h"

namespace genctx::models {

enum class Variant { Baseline, ContextInjection, GenerativeInjection, GenerativeAware };
enum class EmbeddingMode { Fixed, Sequence };

const char* variant_name(Variant v);
/// Accepts the full name or the short row tag (A, C, D, E).
Variant parse_variant(const std::string& name);
const char* variant_tag(Variant v);
const char* mode_name(EmbeddingMode m);
EmbeddingMode parse_mode(const std::string& name);
bool uses_text_encoder(Variant v);

struct ModelConfig {
  std::size_t d_feat = 16;
  std::size_t d_model = 64;
  std::size_t d_text = 32;
  std::size_t encoder_layers = 2;
  std::size_t encoder_heads = 2;
  std::size_t encoder_head_dim = 32;
  std::size_t text_layers = 2;
  std::size_t text_heads = 1;
  std::size_t text_head_dim = 32;
  std::size_t ffn_mult = 4;
  bool text_identity_init = true;
  std::size_t fusion_heads = 1;
  std::size_t fusion_head_dim = 32;
  std::size_t text_vocab = 0;   // text tokenizer size
  std::size_t output_size = 0;  // CTC labels, or 3 for sentiment
  TaskKind task = TaskKind::Asr;
  EmbeddingMode mode = EmbeddingMode::Fixed;

  EncoderShape audio_shape() const;
  EncoderShape text_shape() const;
  bool operator==(const ModelConfig&) const = default;
};

nlohmann::json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j);

/// What the context path receives for one segment.
struct ContextInput {
  enum class Kind { None, Zero, Text };
  Kind kind = Kind::None;
  std::vector<int> ids;

  static ContextInput none() { return {}; }
  /// All-zero context embedding; used for the first segment of a stream.
  static ContextInput zero() { return {Kind::Zero, {}}; }
  static ContextInput text(std::vector<int> ids) { return {Kind::Text, std::move(ids)}; }
};

struct ForwardResult {
  ad::Tensor z;        // encoder output before fusion
  ad::Tensor fused;    // after fusion (equals z for the baseline)
  ad::Tensor output;   // CTC log-probabilities [T x V], or sentiment logits [3]
  ad::Tensor student;  // e^, GenerativeAware only
};

/// One system variant with its own parameters.
///
/// Only the components on the variant's path are constructed: the
/// GenerativeAware system has no text encoder at all.
class ContextSystem {
 public:
  ContextSystem(Variant variant, const ModelConfig& config, std::uint64_t seed);

  /// Injection variants need ContextInput::text or ::zero, and throw
  /// std::invalid_argument on ::none. Baseline and GenerativeAware ignore it.
  ForwardResult forward(const ad::Tensor& features, const ContextInput& context) const;

  /// Context embedding the injection variants fuse (cls, or the sequence in
  /// sequence mode). Zero input gives a zero vector of width d_text.
  ad::Tensor context_embedding(const ContextInput& context) const;

  std::size_t count_inference_params() const;
  std::size_t count_all_params() const { return store_.count(); }

  Variant variant() const { return variant_; }
  const ModelConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  ad::ParameterStore& store() { return store_; }
  const ad::ParameterStore& store() const { return store_; }
  const TextEncoder* text_encoder() const { return text_encoder_ ? &*text_encoder_ : nullptr; }
  const ContextFusion* fusion() const { return fusion_ ? &*fusion_ : nullptr; }
  const ContextStudent* student() const { return student_ ? &*student_ : nullptr; }
  const AcousticEncoder& encoder() const { return encoder_; }

  /// Parameters plus a JSON header (variant, shapes, seed, and `extra`).
  ad::TensorArchive to_archive(const nlohmann::json& extra = nlohmann::json::object()) const;
  static ContextSystem from_archive(const ad::TensorArchive& archive);
  static nlohmann::json archive_header(const ad::TensorArchive& archive);

 private:
  Variant variant_;
  ModelConfig config_;
  std::uint64_t seed_;
  ad::ParameterStore store_;
  AcousticEncoder encoder_;
  std::optional<TextEncoder> text_encoder_;
  std::optional<ContextFusion> fusion_;
  std::optional<ContextStudent> student_;
  ad::LinearParams head_;
};

/// Frozen text encoder used as the distillation target.
class TeacherEncoder {
 public:
  /// Copies the text encoder of an injection-variant checkpoint.
  static TeacherEncoder from_archive(const ad::TensorArchive& archive);
  /// Copies the text encoder of a live injection system.
  static TeacherEncoder from_system(const ContextSystem& system);
  /// Fresh encoder initialised from `seed` (no training).
  TeacherEncoder(const ModelConfig& config, std::uint64_t seed);

  /// Detached [CLS]-style embedding; zero vector for ContextInput::zero.
  ad::Tensor embed(const ContextInput& context) const;
  std::size_t width() const { return encoder_->width(); }
  std::size_t parameter_count() const { return store_->count(); }

 private:
  std::unique_ptr<ad::ParameterStore> store_;
  std::unique_ptr<TextEncoder> encoder_;
};

}  // namespace genctx::models
