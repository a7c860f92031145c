#include "genctx/harness/trainer.h"

#include <fmt/format.h>

#include <chrono>
#include <cmath>

#include "genctx/autodiff/rng.h"
#include "genctx/losses/ctc.h"

namespace genctx::harness {

PreparedSplit prepare_split(const data::StreamManifest& manifest, const models::OutputLabels& labels,
                            models::TaskKind task) {
  PreparedSplit p;
  p.manifest = &manifest;
  for (const data::Segment& s : manifest.segments) {
    p.features.push_back(ad::Tensor::matrix(s.frames, manifest.config.d_feat, s.features));
    if (task == models::TaskKind::Sentiment) {
      p.targets.emplace_back();
      p.feasible.push_back(s.frames > 0);
    } else {
      p.targets.push_back(labels.target(s, task));
      p.feasible.push_back(s.frames > 0 && losses::ctc_min_frames(p.targets.back()) <= s.frames);
    }
  }
  return p;
}

SegmentLoss segment_loss(const models::ContextSystem& system, const ad::Tensor& features,
                         const std::vector<int>& target, int sentiment, const models::ContextInput& context,
                         const models::TeacherEncoder* teacher, const std::optional<models::ContextInput>& teacher_input,
                         const losses::LossConfig& loss) {
  const models::ForwardResult r = system.forward(features, context);
  SegmentLoss out;
  ad::Tensor task = system.config().task == models::TaskKind::Sentiment
                        ? losses::cross_entropy(r.output, sentiment)
                        : losses::ctc_loss(r.output, target, loss.blank);
  out.task = task.item();
  out.total = task;
  if (system.variant() == models::Variant::GenerativeAware && teacher != nullptr && teacher_input) {
    const ad::Tensor ctx = losses::context_l2(teacher->embed(*teacher_input), r.student, loss.context_kind);
    out.context = ctx.item();
    out.total = losses::combined_loss(task, ctx, loss);
  }
  return out;
}

HeldoutPoint distillation_metrics(const models::ContextSystem& system, const PreparedSplit& split,
                                  const models::TeacherEncoder& teacher,
                                  const std::vector<std::optional<models::ContextInput>>& inputs,
                                  losses::ContextLossKind kind) {
  ad::NoGradGuard guard;
  HeldoutPoint point;
  std::size_t n = 0;
  for (std::size_t i = 0; i < split.features.size(); ++i) {
    if (!inputs[i] || !split.feasible[i]) continue;
    const models::ForwardResult r = system.forward(split.features[i], models::ContextInput::none());
    const ad::Tensor e = teacher.embed(*inputs[i]);
    point.context_loss += losses::context_l2(e, r.student, kind).item();
    double dot = 0.0, ne = 0.0, ns = 0.0;
    for (std::size_t k = 0; k < e.numel(); ++k) {
      dot += e[k] * r.student[k];
      ne += e[k] * e[k];
      ns += r.student[k] * r.student[k];
    }
    point.cosine += ne > 0.0 && ns > 0.0 ? dot / std::sqrt(ne * ns) : 0.0;
    ++n;
  }
  if (n > 0) {
    point.context_loss /= static_cast<double>(n);
    point.cosine /= static_cast<double>(n);
  }
  return point;
}

TrainLog train_system(models::ContextSystem& system, const PreparedSplit& train,
                      const std::vector<models::ContextInput>& contexts, const DistillationInputs* distill,
                      const TrainOptions& options, const std::function<void(const StepRecord&)>& on_step) {
  const auto started = std::chrono::steady_clock::now();
  const data::StreamManifest& manifest = *train.manifest;
  if (contexts.size() != manifest.segments.size()) {
    throw std::invalid_argument("one context input per training segment is required");
  }
  const bool distilling = system.variant() == models::Variant::GenerativeAware && distill != nullptr &&
                          distill->teacher != nullptr && options.loss.alpha > 0.0;
  if (distilling && distill->train.size() != manifest.segments.size()) {
    throw std::invalid_argument("one teacher input per training segment is required");
  }

  TrainLog log;
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < train.feasible.size(); ++i) {
    if (train.feasible[i]) {
      usable.push_back(i);
    } else {
      ++log.skipped_infeasible;
    }
  }
  if (usable.empty() && options.steps > 0) throw std::runtime_error("no trainable segments");

  ad::Adam adam(system.store().tensors(), options.optim);
  Rng rng(mix_seed(options.seed, stable_hash("batch-order")));
  std::vector<std::size_t> order;
  std::size_t cursor = 0;

  const bool monitor = distilling && distill->heldout != nullptr && options.checkpoints > 0 && options.steps > 0;
  auto record_heldout = [&](std::size_t step) {
    HeldoutPoint p = distillation_metrics(system, *distill->heldout, *distill->teacher, distill->heldout_inputs,
                                          options.loss.context_kind);
    p.step = step;
    log.heldout.push_back(p);
  };
  if (monitor) record_heldout(0);
  std::size_t next_checkpoint = 1;

  for (std::size_t step = 0; step < options.steps; ++step) {
    const std::size_t batch = std::min(options.batch_size, usable.size());
    StepRecord rec;
    rec.step = step;
    std::size_t with_context = 0;
    for (std::size_t b = 0; b < batch; ++b) {
      if (cursor == order.size()) {
        order = usable;
        rng.shuffle(order);
        cursor = 0;
      }
      const std::size_t i = order[cursor++];
      const data::Segment& seg = manifest.segments[i];
      const std::optional<models::ContextInput> none;
      const SegmentLoss l =
          segment_loss(system, train.features[i], train.targets[i], seg.sentiment, contexts[i],
                       distilling ? distill->teacher : nullptr, distilling ? distill->train[i] : none, options.loss);
      const double total = l.total.item();
      if (!std::isfinite(total)) {
        throw TrainingError(fmt::format("non-finite loss {} at step {} (segment {}, task loss {})", total, step,
                                        seg.key(), l.task));
      }
      rec.task_loss += l.task;
      if (l.context) {
        rec.context_loss += *l.context;
        ++with_context;
      }
      ad::scale(l.total, 1.0 / static_cast<double>(batch)).backward();
    }
    rec.task_loss /= static_cast<double>(batch);
    if (with_context > 0) rec.context_loss /= static_cast<double>(with_context);
    rec.grad_norm = adam.step();
    adam.zero_grad();
    log.steps.push_back(rec);
    if (on_step) on_step(rec);
    if (monitor && next_checkpoint <= options.checkpoints &&
        step + 1 == (next_checkpoint * options.steps + options.checkpoints - 1) / options.checkpoints) {
      record_heldout(step + 1);
      ++next_checkpoint;
    }
  }
  log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return log;
}

}  // namespace genctx::harness
