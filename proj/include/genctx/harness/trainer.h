#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "genctx/autodiff/optim.h"
#include "genctx/data/corpus.h"
#include "genctx/losses/losses.h"
#include "genctx/models/system.h"

namespace genctx::harness {

/// A loss became NaN or infinite; the message names the step.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StepRecord {
  std::size_t step = 0;
  double task_loss = 0.0;     // batch mean
  double context_loss = 0.0;  // batch mean over segments with a teacher
  double grad_norm = 0.0;     // before clipping
};

/// Distillation diagnostics on held-out segments.
struct HeldoutPoint {
  std::size_t step = 0;
  double context_loss = 0.0;
  double cosine = 0.0;
};

struct TrainLog {
  std::vector<StepRecord> steps;
  std::vector<HeldoutPoint> heldout;  // step 0 first, then each checkpoint
  std::size_t skipped_infeasible = 0;
  double seconds = 0.0;
};

/// Tensors and targets prepared once per manifest.
struct PreparedSplit {
  const data::StreamManifest* manifest = nullptr;
  std::vector<ad::Tensor> features;
  std::vector<std::vector<int>> targets;  // empty for sentiment
  std::vector<bool> feasible;
};

PreparedSplit prepare_split(const data::StreamManifest& manifest, const models::OutputLabels& labels,
                            models::TaskKind task);

struct DistillationInputs {
  const models::TeacherEncoder* teacher = nullptr;
  std::vector<std::optional<models::ContextInput>> train;
  const PreparedSplit* heldout = nullptr;
  std::vector<std::optional<models::ContextInput>> heldout_inputs;
};

struct TrainOptions {
  std::size_t steps = 0;
  std::size_t batch_size = 8;
  std::uint64_t seed = 1;  // batch order
  losses::LossConfig loss;
  ad::AdamConfig optim;
  std::size_t checkpoints = 10;
};

/// Per-segment loss of one forward pass (task plus weighted distillation).
struct SegmentLoss {
  ad::Tensor total;
  double task = 0.0;
  std::optional<double> context;
};

SegmentLoss segment_loss(const models::ContextSystem& system, const ad::Tensor& features,
                         const std::vector<int>& target, int sentiment, const models::ContextInput& context,
                         const models::TeacherEncoder* teacher, const std::optional<models::ContextInput>& teacher_input,
                         const losses::LossConfig& loss);

/// Minibatch training with the variant's loss. GenerativeAware adds
/// alpha * L_context whenever `distill` provides a teacher input.
TrainLog train_system(models::ContextSystem& system, const PreparedSplit& train,
                      const std::vector<models::ContextInput>& contexts, const DistillationInputs* distill,
                      const TrainOptions& options, const std::function<void(const StepRecord&)>& on_step = {});

/// Mean L_context and mean cosine(e^, e_teacher) over segments that have a teacher input.
HeldoutPoint distillation_metrics(const models::ContextSystem& system, const PreparedSplit& split,
                                  const models::TeacherEncoder& teacher,
                                  const std::vector<std::optional<models::ContextInput>>& inputs,
                                  losses::ContextLossKind kind);

}  // namespace genctx::harness
