#include "genctx/harness/experiment.h"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <chrono>
#include <cmath>
#include <fstream>

#include "genctx/autodiff/checkpoint.h"
#include "genctx/errors.h"
#include "genctx/io.h"

namespace genctx::harness {

using nlohmann::json;
using models::Variant;

models::ModelConfig resolve_model_config(const AppConfig& config, const data::StreamManifest& manifest) {
  models::ModelConfig m = config.model;
  m.d_feat = manifest.config.d_feat;
  m.text_vocab = models::TextTokenizer::for_lexicon(manifest.lexicon).size();
  m.output_size = m.task == models::TaskKind::Sentiment ? 3 : manifest.lexicon.output_labels().size();
  return m;
}

Workspace make_workspace(const AppConfig& config, const data::StreamManifest& train,
                         const data::StreamManifest& eval, context::ContextCache& cache,
                         context::ContextGenerator* generator, bool need_generated) {
  if (!(train.lexicon == eval.lexicon) || train.config.d_feat != eval.config.d_feat) {
    throw std::invalid_argument("train and eval manifests come from different corpora");
  }
  Workspace ws;
  ws.train = &train;
  ws.eval = &eval;
  ws.tokenizer = models::TextTokenizer::for_lexicon(train.lexicon);
  ws.labels = models::OutputLabels::for_lexicon(train.lexicon);
  ws.model = resolve_model_config(config, train);
  ws.train_split = prepare_split(train, ws.labels, ws.model.task);
  ws.eval_split = prepare_split(eval, ws.labels, ws.model.task);
  ws.train_previous = ground_truth_texts(train);
  ws.eval_previous = ground_truth_texts(eval);
  ws.cache = &cache;
  ws.generator = generator;
  ws.backend_fingerprint = generator != nullptr ? generator->fingerprint() : config.context.backend.fingerprint();
  if (need_generated) {
    ws.train_generated = generated_texts(train, cache, generator, config.context.prompt, ws.backend_fingerprint);
    ws.eval_generated = generated_texts(eval, cache, generator, config.context.prompt, ws.backend_fingerprint);
  }
  return ws;
}

namespace {

const TextTable* texts_for(const Workspace& ws, Variant v, bool train) {
  if (v == Variant::ContextInjection) return train ? &ws.train_previous : &ws.eval_previous;
  if (v == Variant::GenerativeInjection) {
    const auto& t = train ? ws.train_generated : ws.eval_generated;
    if (!t) throw std::logic_error("generated contexts were not loaded");
    return &*t;
  }
  return nullptr;
}

std::string decoded_key(const data::Segment& prev, const std::string& text) {
  return fmt::format("{}#decoded-{:08x}", prev.key(), ad::crc32_of(text));
}

}  // namespace

std::vector<models::ContextInput> eval_contexts(const Workspace& ws, Variant variant) {
  return system_inputs(variant, *ws.eval, ws.tokenizer, texts_for(ws, variant, false));
}

TrainedRun train_run(const AppConfig& config, const Workspace& ws, Variant variant, std::uint64_t seed,
                     const models::TeacherEncoder* teacher, const Progress& progress) {
  if (variant == Variant::GenerativeAware && teacher == nullptr && config.loss.alpha > 0.0) {
    throw std::invalid_argument("generative_aware training needs a teacher encoder");
  }
  TrainedRun run;
  run.system = std::make_unique<models::ContextSystem>(variant, ws.model, seed);
  const auto contexts = system_inputs(variant, *ws.train, ws.tokenizer, texts_for(ws, variant, true));

  DistillationInputs distill;
  if (variant == Variant::GenerativeAware && teacher != nullptr) {
    if (!ws.train_generated || !ws.eval_generated) throw std::logic_error("teacher texts were not loaded");
    distill.teacher = teacher;
    distill.train = teacher_inputs(*ws.train, ws.tokenizer, *ws.train_generated);
    distill.heldout = &ws.eval_split;
    distill.heldout_inputs = teacher_inputs(*ws.eval, ws.tokenizer, *ws.eval_generated);
  }
  TrainOptions opt;
  opt.steps = config.train.steps;
  opt.batch_size = config.train.batch_size;
  opt.seed = seed;
  opt.loss = config.loss;
  opt.optim = config.optim;
  opt.checkpoints = config.train.checkpoints;
  const std::size_t report_every = std::max<std::size_t>(1, config.train.steps / 10);
  run.log = train_system(*run.system, ws.train_split, contexts, distill.teacher ? &distill : nullptr, opt,
                         [&](const StepRecord& r) {
                           if (progress && (r.step + 1) % report_every == 0) {
                             progress(fmt::format("  {} seed {} step {}/{} task {:.4f} context {:.4f}",
                                                  models::variant_name(variant), seed, r.step + 1,
                                                  config.train.steps, r.task_loss, r.context_loss));
                           }
                         });
  run.train_params = run.system->count_all_params() + (teacher != nullptr ? teacher->parameter_count() : 0);
  return run;
}

EvalResult evaluate_run(const AppConfig& config, const Workspace& ws, const models::ContextSystem& system) {
  EvalInputs in;
  in.labels = &ws.labels;
  const Variant v = system.variant();
  if (config.eval.context_source == ContextSource::Decoded && models::uses_text_encoder(v)) {
    in.decoded = [&ws, &config, v](const data::Segment& seg, const std::string& decoded) {
      const data::Segment& prev = ws.eval->segment(seg.stream, seg.index - 1);
      if (v == Variant::ContextInjection) return models::ContextInput::text(ws.tokenizer.encode(decoded));
      context::GenerationRequest req{decoded_key(prev, decoded), prev.topic, config.context.prompt, decoded};
      std::string text;
      if (ws.generator != nullptr) {
        text = context::get_or_generate(*ws.cache, *ws.generator, req).text;
      } else {
        const auto hit = ws.cache->get(req.source_key, req.prompt, ws.backend_fingerprint);
        if (!hit) throw std::runtime_error(fmt::format("no cached generation for decoded segment {}", prev.key()));
        text = hit->text;
      }
      return models::ContextInput::text(ws.tokenizer.encode(text));
    };
  } else {
    in.contexts = eval_contexts(ws, v);
  }
  return evaluate_system(system, ws.eval_split, in);
}

json RunResult::to_json(models::TaskKind task) const {
  json heldout = json::array();
  for (const auto& h : log.heldout) heldout.push_back({{"step", h.step}, {"context_loss", h.context_loss}, {"cosine", h.cosine}});
  json j{{"record", "run"},
         {"variant", models::variant_name(variant)},
         {"seed", seed},
         {"metrics", eval.to_json(task)},
         {"inference_params", inference_params},
         {"train_params", train_params},
         {"train_seconds", log.seconds},
         {"skipped_infeasible", log.skipped_infeasible},
         {"final_task_loss", log.steps.empty() ? 0.0 : log.steps.back().task_loss},
         {"heldout", heldout},
         {"checkpoint", checkpoint}};
  return j;
}

const metrics::MetricReport* ExperimentReport::metric(Variant v, const std::string& name) const {
  for (const auto& [variant, reports] : metrics) {
    if (variant != v) continue;
    for (const auto& r : reports) {
      if (r.metric == name) return &r;
    }
  }
  return nullptr;
}

bool ExperimentReport::checks_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

std::string ExperimentReport::table() const {
  std::vector<std::string> headers{"Row", "Variant"};
  std::vector<std::string> names;
  if (!metrics.empty()) {
    for (const auto& r : metrics.front().second) {
      names.push_back(r.metric);
      headers.push_back(r.metric);
    }
  }
  headers.push_back("infer. params");
  headers.push_back("train params");
  std::vector<std::vector<std::string>> rows;
  for (const auto& [v, reports] : metrics) {
    std::vector<std::string> row{models::variant_tag(v), models::variant_name(v)};
    for (const auto& r : reports) row.push_back(fmt::format("{:.2f} ± {:.2f}", r.mean(), r.stddev()));
    row.push_back(std::to_string(inference_params.at(v)));
    row.push_back(std::to_string(train_params.at(v)));
    rows.push_back(row);
  }
  std::string out = fmt::format("config {}  task {}  seeds {}  wall {:.1f}s\n", fingerprint, models::task_name(task),
                                config.at("train").at("seeds").dump(), seconds);
  out += metrics::format_table(headers, rows);
  out += "\nper seed:\n";
  for (const auto& [v, reports] : metrics) {
    for (const auto& r : reports) {
      out += fmt::format("  {} {:<20} {}\n", models::variant_tag(v), r.metric, fmt::join(r.values, "  "));
    }
  }
  const auto* d = metric(Variant::GenerativeInjection, "ambiguous_error");
  const auto* e = metric(Variant::GenerativeAware, "ambiguous_error");
  if (d && e) out += fmt::format("\nD - E ambiguous error: {:+.2f}\n", d->mean() - e->mean());
  const auto* dw = metric(Variant::GenerativeInjection, "wer");
  const auto* ew = metric(Variant::GenerativeAware, "wer");
  if (dw && ew) out += fmt::format("D - E WER: {:+.2f}\n", dw->mean() - ew->mean());
  if (!checks.empty()) {
    out += "\nchecks:\n";
    for (const auto& c : checks) out += fmt::format("  {} {}: {}\n", c.pass ? "PASS" : "FAIL", c.name, c.detail);
  }
  return out;
}

std::string ExperimentReport::jsonl() const {
  std::string out = json{{"record", "header"}, {"fingerprint", fingerprint}, {"config", config},
                         {"seconds", seconds}}.dump() + "\n";
  for (const auto& r : runs) out += r.to_json(task).dump() + "\n";
  for (const auto& [v, reports] : metrics) {
    for (const auto& r : reports) {
      json j = r.to_json();
      j["record"] = "metric";
      j["variant"] = models::variant_name(v);
      j["inference_params"] = inference_params.at(v);
      j["train_params"] = train_params.at(v);
      out += j.dump() + "\n";
    }
  }
  for (const auto& c : checks) {
    out += json{{"record", "check"}, {"name", c.name}, {"pass", c.pass}, {"detail", c.detail}}.dump() + "\n";
  }
  return out;
}

namespace {

void add_checks(const AppConfig& config, ExperimentReport& rep) {
  auto has = [&](Variant v) { return rep.inference_params.count(v) > 0; };
  const auto& P = rep.inference_params;
  if (has(Variant::Baseline) && has(Variant::GenerativeAware) && has(Variant::GenerativeInjection)) {
    const bool ok = P.at(Variant::Baseline) < P.at(Variant::GenerativeAware) &&
                    P.at(Variant::GenerativeAware) < P.at(Variant::GenerativeInjection);
    rep.checks.push_back({"inference parameters A < E < D", ok,
                          fmt::format("{} < {} < {}", P.at(Variant::Baseline), P.at(Variant::GenerativeAware),
                                      P.at(Variant::GenerativeInjection))});
  }
  if (has(Variant::ContextInjection) && has(Variant::GenerativeInjection)) {
    rep.checks.push_back({"inference parameters C == D",
                          P.at(Variant::ContextInjection) == P.at(Variant::GenerativeInjection),
                          fmt::format("{} vs {}", P.at(Variant::ContextInjection), P.at(Variant::GenerativeInjection))});
  }
  if (!config.compare.check_ordering || rep.task == models::TaskKind::Sentiment) return;
  const auto* a = rep.metric(Variant::Baseline, "ambiguous_error");
  const auto* d = rep.metric(Variant::GenerativeInjection, "ambiguous_error");
  const auto* e = rep.metric(Variant::GenerativeAware, "ambiguous_error");
  if (a) rep.checks.push_back({"baseline ambiguous error >= 40", a->mean() >= 40.0, fmt::format("{:.2f}", a->mean())});
  if (d) rep.checks.push_back({"generative injection ambiguous error <= 25", d->mean() <= 25.0, fmt::format("{:.2f}", d->mean())});
  if (e) rep.checks.push_back({"generative aware ambiguous error <= 25", e->mean() <= 25.0, fmt::format("{:.2f}", e->mean())});
  if (d && e) {
    rep.checks.push_back({"|D - E| ambiguous error <= 2", std::abs(d->mean() - e->mean()) <= 2.0,
                          fmt::format("{:+.2f}", d->mean() - e->mean())});
  }
}

}  // namespace

ExperimentReport compare_variants(const AppConfig& config, const data::StreamManifest& train,
                                  const data::StreamManifest& eval, context::ContextCache& cache,
                                  context::ContextGenerator& generator, const Progress& progress) {
  const auto started = std::chrono::steady_clock::now();
  ExperimentReport rep;
  rep.config = to_json(config);
  rep.fingerprint = config_fingerprint(config);
  rep.task = config.model.task;

  const auto wants = [&](Variant v) {
    return std::find(config.compare.variants.begin(), config.compare.variants.end(), v) !=
           config.compare.variants.end();
  };
  const bool need_generated = wants(Variant::GenerativeInjection) || wants(Variant::GenerativeAware);
  if (progress) progress("preparing data and contexts");
  const Workspace ws = make_workspace(config, train, eval, cache, &generator, need_generated);

  std::filesystem::path runs_file;
  if (!config.output_dir.empty()) {
    std::filesystem::create_directories(std::filesystem::path(config.output_dir) / ("runs-" + rep.fingerprint));
    runs_file = std::filesystem::path(config.output_dir) / fmt::format("compare-{}.runs.jsonl", rep.fingerprint);
    write_file_atomic(runs_file, json{{"record", "header"}, {"fingerprint", rep.fingerprint}, {"config", rep.config}}.dump() + "\n");
  }

  // Training order: D before E, since E distils D's text encoder.
  std::vector<Variant> order;
  for (Variant v : {Variant::Baseline, Variant::ContextInjection, Variant::GenerativeInjection, Variant::GenerativeAware}) {
    if (wants(v) || (v == Variant::GenerativeInjection && wants(Variant::GenerativeAware))) order.push_back(v);
  }
  std::map<Variant, std::vector<metrics::MetricReport>> reports;
  for (std::uint64_t seed : config.train.seeds) {
    std::optional<models::TeacherEncoder> teacher;
    for (Variant v : order) {
      if (progress) progress(fmt::format("training {} (seed {})", models::variant_name(v), seed));
      TrainedRun run = train_run(config, ws, v, seed, teacher ? &*teacher : nullptr, progress);
      if (v == Variant::GenerativeInjection) teacher.emplace(models::TeacherEncoder::from_system(*run.system));
      if (!wants(v)) continue;

      RunResult result;
      result.variant = v;
      result.seed = seed;
      result.log = std::move(run.log);
      result.eval = evaluate_run(config, ws, *run.system);
      result.inference_params = run.system->count_inference_params();
      result.train_params = run.train_params;
      if (!config.output_dir.empty()) {
        const auto path = std::filesystem::path(config.output_dir) / ("runs-" + rep.fingerprint) /
                          fmt::format("{}-seed{}.ckpt", models::variant_name(v), seed);
        run.system->to_archive(json{{"config", rep.config}}).save(path);
        result.checkpoint = path.string();
        std::ofstream(runs_file, std::ios::app) << result.to_json(rep.task).dump() << "\n";
      }
      if (progress) {
        std::string line = fmt::format("  {} seed {}:", models::variant_name(v), seed);
        for (const auto& [name, value] : result.eval.metrics(rep.task)) line += fmt::format(" {} {:.2f}", name, value);
        progress(line);
      }
      auto& vr = reports[v];
      for (const auto& [name, value] : result.eval.metrics(rep.task)) {
        auto it = std::find_if(vr.begin(), vr.end(), [&](const auto& r) { return r.metric == name; });
        if (it == vr.end()) {
          vr.push_back({name, eval.split, {}, {}});
          it = vr.end() - 1;
        }
        it->add(seed, value);
      }
      rep.inference_params[v] = result.inference_params;
      rep.train_params[v] = result.train_params;
      rep.runs.push_back(std::move(result));
    }
  }
  for (Variant v : order) {
    if (reports.count(v)) rep.metrics.emplace_back(v, reports.at(v));
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  add_checks(config, rep);
  return rep;
}

std::filesystem::path write_report(const ExperimentReport& report, const std::filesystem::path& dir) {
  const auto base = dir / fmt::format("compare-{}", report.fingerprint);
  write_file_atomic(std::filesystem::path(base.string() + ".jsonl"), report.jsonl());
  const std::filesystem::path text = base.string() + ".txt";
  write_file_atomic(text, report.table());
  return text;
}

}  // namespace genctx::harness
