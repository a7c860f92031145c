#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "genctx/autodiff/optim.h"
#include "genctx/context/generator.h"
#include "genctx/data/corpus.h"
#include "genctx/losses/losses.h"
#include "genctx/models/system.h"

namespace genctx::harness {

struct DataSection {
  std::string dir = "genctx-data";
  std::string train;  // defaults to <dir>/train.jsonl
  std::string eval;   // defaults to <dir>/eval.jsonl

  std::filesystem::path train_path() const;
  std::filesystem::path eval_path() const;
};

struct ContextSection {
  context::PromptId prompt = context::PromptId::P4;
  context::BackendConfig backend;
  std::string cache;  // defaults to <output_dir>/contexts.cache
};

struct TrainSection {
  models::Variant variant = models::Variant::GenerativeAware;
  std::size_t steps = 1500;
  std::size_t batch_size = 8;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::size_t checkpoints = 10;  // held-out evaluations spread over the run
  std::string teacher_checkpoint;
};

enum class ContextSource { GroundTruth, Decoded };
const char* context_source_name(ContextSource s);

struct EvalSection {
  std::string checkpoint;
  std::string split = "eval";
  ContextSource context_source = ContextSource::GroundTruth;
};

struct CompareSection {
  std::vector<models::Variant> variants = {models::Variant::Baseline, models::Variant::ContextInjection,
                                           models::Variant::GenerativeInjection,
                                           models::Variant::GenerativeAware};
  bool check_ordering = true;
};

struct AppConfig {
  data::CorpusConfig corpus;
  DataSection data;
  models::ModelConfig model;
  ContextSection context;
  losses::LossConfig loss;
  ad::AdamConfig optim;
  TrainSection train;
  EvalSection eval;
  CompareSection compare;
  std::string output_dir = "genctx-out";

  std::filesystem::path cache_path() const;
};

nlohmann::json to_json(const AppConfig& config);
/// Strict: every key must exist in the default configuration and carry the
/// same JSON type. Throws ConfigError naming the offending dotted key.
AppConfig config_from_json(const nlohmann::json& j);

/// File values (if `path` is set) then `--dotted.key value` overrides.
/// A bare leaf name is accepted when it is unique in the configuration.
AppConfig load_config(const std::optional<std::filesystem::path>& path,
                      const std::vector<std::pair<std::string, std::string>>& overrides);

/// Short hex digest of the resolved configuration.
std::string config_fingerprint(const AppConfig& config);

/// Throws ConfigError("missing required field <key>") when `value` is empty.
void require_field(const std::string& value, const std::string& key);

/// Checks ranges and cross-field constraints. Throws ConfigError.
void validate(const AppConfig& config);

}  // namespace genctx::harness
