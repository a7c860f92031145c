#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "genctx/context/cache.h"
#include "genctx/harness/config.h"
#include "genctx/harness/contexts.h"
#include "genctx/harness/evaluator.h"
#include "genctx/harness/trainer.h"
#include "genctx/metrics/report.h"

namespace genctx::harness {

using Progress = std::function<void(const std::string&)>;

/// Everything shared by the runs of one configuration.
struct Workspace {
  const data::StreamManifest* train = nullptr;
  const data::StreamManifest* eval = nullptr;
  models::TextTokenizer tokenizer;
  models::OutputLabels labels;
  models::ModelConfig model;
  PreparedSplit train_split;
  PreparedSplit eval_split;
  TextTable train_previous;  // ground-truth previous transcripts
  TextTable eval_previous;
  std::optional<TextTable> train_generated;  // configured prompt
  std::optional<TextTable> eval_generated;
  context::ContextCache* cache = nullptr;
  context::ContextGenerator* generator = nullptr;  // may be null (cache-only)
  std::string backend_fingerprint;
};

/// Builds the workspace. Generated texts are loaded (cache-only when
/// `generator` is null) only if `need_generated` is set.
Workspace make_workspace(const AppConfig& config, const data::StreamManifest& train,
                         const data::StreamManifest& eval, context::ContextCache& cache,
                         context::ContextGenerator* generator, bool need_generated);

/// Model shapes from the config plus sizes taken from the data.
models::ModelConfig resolve_model_config(const AppConfig& config, const data::StreamManifest& manifest);

struct TrainedRun {
  std::unique_ptr<models::ContextSystem> system;
  TrainLog log;
  std::size_t train_params = 0;
};

/// Trains one variant and seed. GenerativeAware needs `teacher`.
TrainedRun train_run(const AppConfig& config, const Workspace& ws, models::Variant variant, std::uint64_t seed,
                     const models::TeacherEncoder* teacher, const Progress& progress = {});

/// Evaluates on the workspace's eval split with the configured context source.
EvalResult evaluate_run(const AppConfig& config, const Workspace& ws, const models::ContextSystem& system);

/// Context inputs of the eval split for a variant (ground-truth source).
std::vector<models::ContextInput> eval_contexts(const Workspace& ws, models::Variant variant);

struct RunResult {
  models::Variant variant = models::Variant::Baseline;
  std::uint64_t seed = 0;
  EvalResult eval;
  TrainLog log;
  std::size_t inference_params = 0;
  std::size_t train_params = 0;
  std::string checkpoint;
  nlohmann::json to_json(models::TaskKind task) const;
};

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ExperimentReport {
  nlohmann::json config;
  std::string fingerprint;
  models::TaskKind task = models::TaskKind::Asr;
  std::vector<RunResult> runs;
  std::vector<std::pair<models::Variant, std::vector<metrics::MetricReport>>> metrics;
  std::map<models::Variant, std::size_t> inference_params;
  std::map<models::Variant, std::size_t> train_params;
  double seconds = 0.0;
  std::vector<CheckResult> checks;

  const metrics::MetricReport* metric(models::Variant v, const std::string& name) const;
  bool checks_pass() const;
  std::string table() const;
  /// Line-delimited records: header, one per run, one per variant metric, checks.
  std::string jsonl() const;
};

/// Trains and evaluates every configured variant over the seed list, on
/// shared data. GenerativeInjection is trained before GenerativeAware and
/// its text encoder becomes the frozen teacher (it is trained for that
/// purpose even when not listed). With a non-empty output directory, each
/// finished run is appended to compare-<fp>.runs.jsonl immediately.
ExperimentReport compare_variants(const AppConfig& config, const data::StreamManifest& train,
                                  const data::StreamManifest& eval, context::ContextCache& cache,
                                  context::ContextGenerator& generator, const Progress& progress = {});

/// Writes compare-<fp>.jsonl and compare-<fp>.txt; returns the text path.
std::filesystem::path write_report(const ExperimentReport& report, const std::filesystem::path& dir);

}  // namespace genctx::harness
