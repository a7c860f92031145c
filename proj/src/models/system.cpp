#include "genctx/models/system.h"

#include <fmt/format.h>

#include <stdexcept>

#include "genctx/errors.h"

namespace genctx::models {

using nlohmann::json;

namespace {

constexpr const char* kCheckpointKind = "genctx-checkpoint";

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::Baseline: return "baseline";
    case Variant::ContextInjection: return "context_injection";
    case Variant::GenerativeInjection: return "generative_injection";
    case Variant::GenerativeAware: return "generative_aware";
  }
  return "?";
}

const char* variant_tag(Variant v) {
  switch (v) {
    case Variant::Baseline: return "A";
    case Variant::ContextInjection: return "C";
    case Variant::GenerativeInjection: return "D";
    case Variant::GenerativeAware: return "E";
  }
  return "?";
}

Variant parse_variant(const std::string& name) {
  for (Variant v : {Variant::Baseline, Variant::ContextInjection, Variant::GenerativeInjection,
                    Variant::GenerativeAware}) {
    if (name == variant_name(v) || name == variant_tag(v)) return v;
  }
  throw std::invalid_argument(fmt::format(
      "unknown variant '{}' (baseline, context_injection, generative_injection, generative_aware)", name));
}

const char* mode_name(EmbeddingMode m) { return m == EmbeddingMode::Fixed ? "fixed" : "sequence"; }

EmbeddingMode parse_mode(const std::string& name) {
  if (name == "fixed") return EmbeddingMode::Fixed;
  if (name == "sequence") return EmbeddingMode::Sequence;
  throw std::invalid_argument(fmt::format("unknown embedding mode '{}' (fixed, sequence)", name));
}

bool uses_text_encoder(Variant v) {
  return v == Variant::ContextInjection || v == Variant::GenerativeInjection;
}

EncoderShape ModelConfig::audio_shape() const {
  return {d_feat, d_model, encoder_layers, encoder_heads, encoder_head_dim, ffn_mult};
}

EncoderShape ModelConfig::text_shape() const {
  return {text_vocab, d_text, text_layers, text_heads, text_head_dim, ffn_mult, text_identity_init};
}

json to_json(const ModelConfig& c) {
  return json{{"d_feat", c.d_feat},
              {"d_model", c.d_model},
              {"d_text", c.d_text},
              {"encoder_layers", c.encoder_layers},
              {"encoder_heads", c.encoder_heads},
              {"encoder_head_dim", c.encoder_head_dim},
              {"text_layers", c.text_layers},
              {"text_heads", c.text_heads},
              {"text_head_dim", c.text_head_dim},
              {"ffn_mult", c.ffn_mult},
              {"text_identity_init", c.text_identity_init},
              {"fusion_heads", c.fusion_heads},
              {"fusion_head_dim", c.fusion_head_dim},
              {"text_vocab", c.text_vocab},
              {"output_size", c.output_size},
              {"task", task_name(c.task)},
              {"mode", mode_name(c.mode)}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  const json defaults = to_json(c);
  for (const auto& [key, value] : j.items()) {
    if (!defaults.contains(key)) throw ConfigError(fmt::format("unknown model key '{}'", key));
  }
  try {
    read_field(j, "d_feat", c.d_feat);
    read_field(j, "d_model", c.d_model);
    read_field(j, "d_text", c.d_text);
    read_field(j, "encoder_layers", c.encoder_layers);
    read_field(j, "encoder_heads", c.encoder_heads);
    read_field(j, "encoder_head_dim", c.encoder_head_dim);
    read_field(j, "text_layers", c.text_layers);
    read_field(j, "text_heads", c.text_heads);
    read_field(j, "text_head_dim", c.text_head_dim);
    read_field(j, "ffn_mult", c.ffn_mult);
    read_field(j, "text_identity_init", c.text_identity_init);
    read_field(j, "fusion_heads", c.fusion_heads);
    read_field(j, "fusion_head_dim", c.fusion_head_dim);
    read_field(j, "text_vocab", c.text_vocab);
    read_field(j, "output_size", c.output_size);
    if (j.contains("task")) c.task = parse_task(j.at("task").get<std::string>());
    if (j.contains("mode")) c.mode = parse_mode(j.at("mode").get<std::string>());
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("model config: {}", e.what()));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(fmt::format("model config: {}", e.what()));
  }
  return c;
}

ContextSystem::ContextSystem(Variant variant, const ModelConfig& config, std::uint64_t seed)
    : variant_(variant),
      config_(config),
      seed_(seed),
      store_(seed),
      encoder_(store_, "encoder", config.audio_shape()) {
  if (config.output_size == 0) throw std::invalid_argument("model output_size must be set");
  if (config.task == TaskKind::Sentiment && config.output_size != 3) {
    throw std::invalid_argument("sentiment head must have exactly 3 outputs");
  }
  if (uses_text_encoder(variant)) {
    if (config.text_vocab < 2) throw std::invalid_argument("text encoder needs a vocabulary");
    text_encoder_.emplace(store_, "text_encoder", config.text_shape());
  }
  if (variant == Variant::GenerativeAware) student_.emplace(store_, "student", config.d_model, config.d_text);
  if (variant != Variant::Baseline) {
    fusion_.emplace(store_, "fusion", config.d_model, config.d_text, config.fusion_heads, config.fusion_head_dim);
  }
  head_ = ad::LinearParams::create(store_, "head", config.d_model, config.output_size);
}

ad::Tensor ContextSystem::context_embedding(const ContextInput& context) const {
  if (!text_encoder_) throw std::logic_error(fmt::format("{} has no text encoder", variant_name(variant_)));
  switch (context.kind) {
    case ContextInput::Kind::Zero:
      return ad::Tensor::zeros({config_.d_text});
    case ContextInput::Kind::Text: {
      TextEncoding enc = text_encoder_->forward(context.ids);
      return config_.mode == EmbeddingMode::Fixed ? enc.cls : enc.sequence;
    }
    case ContextInput::Kind::None:
      break;
  }
  throw std::invalid_argument(
      fmt::format("{} needs context text (or the zero-context fallback)", variant_name(variant_)));
}

ForwardResult ContextSystem::forward(const ad::Tensor& features, const ContextInput& context) const {
  ForwardResult r;
  r.z = encoder_.forward(features);
  r.fused = r.z;
  if (uses_text_encoder(variant_)) {
    r.fused = fusion_->forward(r.z, context_embedding(context));
  } else if (variant_ == Variant::GenerativeAware) {
    r.student = student_->forward(r.z);
    r.fused = fusion_->forward(r.z, r.student);
  }
  if (config_.task == TaskKind::Sentiment) {
    r.output = ad::linear(ad::mean_pool(r.fused), head_);
  } else {
    r.output = ad::log_softmax(ad::linear(r.fused, head_), 1);
  }
  return r;
}

std::size_t ContextSystem::count_inference_params() const {
  // Every constructed component is on this variant's inference path.
  return store_.count();
}

ad::TensorArchive ContextSystem::to_archive(const json& extra) const {
  ad::TensorArchive archive;
  json header{{"kind", kCheckpointKind},
              {"variant", variant_name(variant_)},
              {"seed", seed_},
              {"model", to_json(config_)},
              {"extra", extra}};
  archive.metadata = header.dump();
  ad::archive_parameters(store_, archive);
  return archive;
}

json ContextSystem::archive_header(const ad::TensorArchive& archive) {
  json header;
  try {
    header = json::parse(archive.metadata);
  } catch (const json::exception& e) {
    throw IntegrityError(fmt::format("checkpoint header unreadable: {}", e.what()));
  }
  if (!header.is_object() || header.value("kind", "") != kCheckpointKind) {
    throw IntegrityError("archive is not a model checkpoint");
  }
  return header;
}

ContextSystem ContextSystem::from_archive(const ad::TensorArchive& archive) {
  const json header = archive_header(archive);
  ContextSystem system(parse_variant(header.at("variant").get<std::string>()),
                       model_config_from_json(header.at("model")), header.at("seed").get<std::uint64_t>());
  ad::restore_parameters(archive, system.store_);
  return system;
}

TeacherEncoder::TeacherEncoder(const ModelConfig& config, std::uint64_t seed)
    : store_(std::make_unique<ad::ParameterStore>(seed)),
      encoder_(std::make_unique<TextEncoder>(*store_, "text_encoder", config.text_shape())) {}

TeacherEncoder TeacherEncoder::from_archive(const ad::TensorArchive& archive) {
  const json header = ContextSystem::archive_header(archive);
  const Variant v = parse_variant(header.at("variant").get<std::string>());
  if (!uses_text_encoder(v)) {
    throw std::invalid_argument(fmt::format("teacher checkpoint is a {} system, which has no text encoder",
                                            variant_name(v)));
  }
  TeacherEncoder teacher(model_config_from_json(header.at("model")), header.at("seed").get<std::uint64_t>());
  ad::restore_parameters(archive, *teacher.store_, "text_encoder.");
  return teacher;
}

TeacherEncoder TeacherEncoder::from_system(const ContextSystem& system) {
  if (system.text_encoder() == nullptr) {
    throw std::invalid_argument(fmt::format("{} has no text encoder", variant_name(system.variant())));
  }
  return from_archive(system.to_archive());
}

ad::Tensor TeacherEncoder::embed(const ContextInput& context) const {
  if (context.kind == ContextInput::Kind::Zero) return ad::Tensor::zeros({encoder_->width()});
  if (context.kind != ContextInput::Kind::Text) throw std::invalid_argument("teacher needs context text");
  ad::NoGradGuard guard;
  return encoder_->forward(context.ids).cls.detach();
}

}  // namespace genctx::models
