#include "genctx/harness/cli.h"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <CLI11.hpp>
#include <chrono>
#include <fstream>
#include <optional>

#include "genctx/context/cache.h"
#include "genctx/data/manifest.h"
#include "genctx/errors.h"
#include "genctx/harness/experiment.h"
#include "genctx/harness/grad_suite.h"
#include "genctx/io.h"
#include "genctx/metrics/report.h"

namespace genctx::harness {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

/// An acceptance check did not hold; maps to exit code 4.
class AcceptanceFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Invocation {
  std::optional<fs::path> config_path;
  std::vector<std::pair<std::string, std::string>> overrides;
  std::string prompt_filter;
  std::string grad_filter;
  std::optional<std::uint64_t> seed;
};

std::vector<std::pair<std::string, std::string>> parse_overrides(const std::vector<std::string>& extras) {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& a = extras[i];
    if (a.rfind("--", 0) != 0 || a.size() <= 2) {
      throw ConfigError(fmt::format("unexpected argument '{}' (overrides look like --section.key value)", a));
    }
    const std::string body = a.substr(2);
    const auto eq = body.find('=');
    if (eq != std::string::npos) {
      out.emplace_back(body.substr(0, eq), body.substr(eq + 1));
    } else {
      if (i + 1 >= extras.size()) throw ConfigError(fmt::format("override --{} needs a value", body));
      out.emplace_back(body, extras[++i]);
    }
  }
  return out;
}

struct Loaded {
  data::StreamManifest train;
  data::StreamManifest eval;
};

Loaded load_data(const AppConfig& c) {
  return {data::read_manifest(c.data.train_path()), data::read_manifest(c.data.eval_path())};
}

class Commands {
 public:
  Commands(AppConfig config, Invocation inv, std::ostream& out, std::ostream& err)
      : c_(std::move(config)), inv_(std::move(inv)), out_(out), err_(err) {}

  void log(const std::string& line) const {
    const auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    fmt::print(err_, "[{:7.1f}s] {}\n", secs, line);
  }

  int gen_data() {
    const data::Corpus corpus = data::generate_corpus(c_.corpus);
    data::write_manifest(corpus.train, c_.data.train_path());
    data::write_manifest(corpus.eval, c_.data.eval_path());
    fmt::print(out_, "wrote {} train segments to {}\n", corpus.train.segments.size(), c_.data.train_path().string());
    fmt::print(out_, "wrote {} eval segments to {}\n", corpus.eval.segments.size(), c_.data.eval_path().string());
    return kExitOk;
  }

  int gen_context() {
    const Loaded d = load_data(c_);
    context::ContextCache cache(c_.cache_path());
    auto generator = context::make_generator(c_.context.backend, d.train.lexicon);
    std::vector<context::PromptId> prompts(context::kAllPrompts.begin(), context::kAllPrompts.end());
    if (!inv_.prompt_filter.empty()) prompts = {context::parse_prompt(inv_.prompt_filter)};
    for (context::PromptId p : prompts) {
      for (const data::StreamManifest* m : {&d.train, &d.eval}) {
        const TextTable t = generated_texts(*m, cache, generator.get(), p, generator->fingerprint());
        log(fmt::format("{} {}: {} contexts", context::prompt_name(p), m->split, t.size()));
      }
    }
    fmt::print(out_, "cache {} holds {} entries ({} backend calls this run)\n", cache.path().string(), cache.size(),
               generator->calls());
    return kExitOk;
  }

  int train() {
    const Loaded d = load_data(c_);
    context::ContextCache cache(c_.cache_path());
    auto generator = context::make_generator(c_.context.backend, d.train.lexicon);
    const models::Variant v = c_.train.variant;
    const bool need_generated = v == models::Variant::GenerativeInjection || v == models::Variant::GenerativeAware;
    const Workspace ws = make_workspace(c_, d.train, d.eval, cache, generator.get(), need_generated);
    const std::uint64_t seed = inv_.seed.value_or(c_.train.seeds.front());
    const auto progress = [this](const std::string& s) { log(s); };

    std::optional<models::TeacherEncoder> teacher;
    if (v == models::Variant::GenerativeAware && c_.loss.alpha > 0.0) {
      if (!c_.train.teacher_checkpoint.empty()) {
        teacher.emplace(models::TeacherEncoder::from_archive(ad::TensorArchive::load(c_.train.teacher_checkpoint)));
      } else {
        log(fmt::format("no train.teacher_checkpoint; training generative_injection seed {} as teacher", seed));
        TrainedRun t = train_run(c_, ws, models::Variant::GenerativeInjection, seed, nullptr, progress);
        teacher.emplace(models::TeacherEncoder::from_system(*t.system));
      }
    }
    TrainedRun run = train_run(c_, ws, v, seed, teacher ? &*teacher : nullptr, progress);
    const fs::path dir(c_.output_dir);
    fs::create_directories(dir);
    const fs::path ckpt = dir / fmt::format("{}-seed{}.ckpt", models::variant_name(v), seed);
    run.system->to_archive(json{{"config", to_json(c_)}}).save(ckpt);

    json log_json{{"variant", models::variant_name(v)}, {"seed", seed}, {"seconds", run.log.seconds},
                  {"skipped_infeasible", run.log.skipped_infeasible}};
    json steps = json::array(), heldout = json::array();
    for (const auto& s : run.log.steps) {
      steps.push_back({{"step", s.step}, {"task_loss", s.task_loss}, {"context_loss", s.context_loss},
                       {"grad_norm", s.grad_norm}});
    }
    for (const auto& h : run.log.heldout) {
      heldout.push_back({{"step", h.step}, {"context_loss", h.context_loss}, {"cosine", h.cosine}});
    }
    log_json["steps"] = std::move(steps);
    log_json["heldout"] = std::move(heldout);
    const fs::path log_path = dir / fmt::format("{}-seed{}.train.json", models::variant_name(v), seed);
    write_file_atomic(log_path, log_json.dump() + "\n");
    fmt::print(out_, "checkpoint {}\ntrain log {}\n", ckpt.string(), log_path.string());
    return kExitOk;
  }

  int eval() {
    require_field(c_.eval.checkpoint, "eval.checkpoint");
    const Loaded d = load_data(c_);
    const ad::TensorArchive archive = ad::TensorArchive::load(c_.eval.checkpoint);
    const models::ContextSystem system = models::ContextSystem::from_archive(archive);
    AppConfig c = c_;
    c.model = system.config();
    // The split to score stands in as the eval manifest.
    const data::StreamManifest& target = c.eval.split == "train" ? d.train : d.eval;
    context::ContextCache cache(c.cache_path());
    auto generator = context::make_generator(c.context.backend, d.train.lexicon);
    const bool need_generated = system.variant() == models::Variant::GenerativeInjection;
    const Workspace ws = make_workspace(c, d.train, target, cache, generator.get(), need_generated);
    if (!(ws.model == system.config())) {
      throw ConfigError("checkpoint shapes do not match the data (different corpus?)");
    }
    const EvalResult r = evaluate_run(c, ws, system);
    json j = r.to_json(system.config().task);
    j["variant"] = models::variant_name(system.variant());
    j["checkpoint"] = c.eval.checkpoint;
    j["split"] = c.eval.split;
    j["context_source"] = context_source_name(c.eval.context_source);
    j["inference_params"] = system.count_inference_params();
    fmt::print(out_, "{}\n", j.dump(2));
    return kExitOk;
  }

  int compare() {
    const Loaded d = load_data(c_);
    context::ContextCache cache(c_.cache_path());
    auto generator = context::make_generator(c_.context.backend, d.train.lexicon);
    const ExperimentReport rep = compare_variants(c_, d.train, d.eval, cache, *generator,
                                                  [this](const std::string& s) { log(s); });
    fs::create_directories(c_.output_dir);
    const fs::path text = write_report(rep, c_.output_dir);
    fmt::print(out_, "{}\nreport {}\n", rep.table(), text.string());
    if (!rep.checks_pass()) throw AcceptanceFailure("one or more comparison checks failed");
    return kExitOk;
  }

  int grad_check() {
    const auto cases = run_grad_suite(inv_.seed.value_or(7), inv_.grad_filter);
    if (cases.empty()) throw ConfigError(fmt::format("no gradient check matches '{}'", inv_.grad_filter));
    bool ok = true;
    for (const GradCase& g : cases) {
      ok = ok && g.report.pass;
      fmt::print(out_, "{} {:<40} max_rel_err {:.3e} over {} coordinates{}\n", g.report.pass ? "PASS" : "FAIL",
                 g.name, g.report.max_rel_err, g.report.coordinates,
                 g.parameters ? fmt::format(" ({} parameters)", g.parameters) : "");
      if (!g.report.pass) fmt::print(out_, "     worst: {}\n", g.report.worst);
    }
    if (!ok) throw AcceptanceFailure("gradient check failed");
    return kExitOk;
  }

  int report() {
    const Loaded d = load_data(c_);
    const data::StreamManifest& m = c_.eval.split == "train" ? d.train : d.eval;
    context::ContextCache cache(c_.cache_path());
    auto generator = context::make_generator(c_.context.backend, d.train.lexicon);
    // Sources are keyed by the segment they were generated from.
    std::vector<metrics::ContextSource> sources;
    metrics::ContextSource gt{"Previous GT text", {}};
    for (const data::Segment& s : m.segments) gt.texts[s.key()] = s.transcript();
    sources.push_back(std::move(gt));
    for (context::PromptId p : context::kAllPrompts) {
      metrics::ContextSource src{context::prompt_name(p), {}};
      for (const auto& [key, text] : generated_texts(m, cache, generator.get(), p, generator->fingerprint())) {
        const std::size_t slash = key.find('/');
        const int stream = std::stoi(key.substr(0, slash));
        const int index = std::stoi(key.substr(slash + 1));
        src.texts[m.segment(stream, index - 1).key()] = text;
      }
      sources.push_back(std::move(src));
    }
    const std::string table = metrics::format_context_report(metrics::context_report(m, sources));
    fs::create_directories(c_.output_dir);
    const fs::path path = fs::path(c_.output_dir) / "context-report.txt";
    write_file_atomic(path, table);
    fmt::print(out_, "{}\nreport {}\n", table, path.string());
    return kExitOk;
  }

 private:
  AppConfig c_;
  Invocation inv_;
  std::ostream& out_;
  std::ostream& err_;
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Context-aware speech model experiments on a synthetic corpus", "genctx"};
  app.require_subcommand(1, 1);
  Invocation inv;
  std::string config_path;

  struct Sub {
    const char* name;
    const char* help;
  };
  const Sub subs[] = {
      {"gen-data", "generate the synthetic train/eval corpus"},
      {"gen-context", "fill the context cache for every prompt (or --prompt)"},
      {"train", "train train.variant on one seed"},
      {"eval", "evaluate eval.checkpoint"},
      {"compare", "train and evaluate every variant over the seed list"},
      {"grad-check", "finite-difference gradient checks"},
      {"report", "ROUGE-1 and length of generated contexts"},
  };
  std::vector<CLI::App*> commands;
  for (const Sub& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    sub->allow_extras();
    sub->add_option("-c,--config", config_path, "JSON configuration file");
    if (std::string(s.name) == "gen-context") sub->add_option("--prompt", inv.prompt_filter, "only this prompt (P1..P4)");
    if (std::string(s.name) == "grad-check") sub->add_option("--filter", inv.grad_filter, "only cases containing this");
    if (std::string(s.name) == "train" || std::string(s.name) == "grad-check") {
      sub->add_option_function<std::uint64_t>("--seed", [&inv](const std::uint64_t& v) { inv.seed = v; }, "seed");
    }
    sub->footer("Any configuration value can be overridden with --section.key value.");
    commands.push_back(sub);
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitConfig;
  }

  CLI::App* chosen = app.get_subcommands().front();
  try {
    if (!config_path.empty()) inv.config_path = config_path;
    inv.overrides = parse_overrides(chosen->remaining());
    AppConfig config = load_config(inv.config_path, inv.overrides);
    validate(config);
    Commands cmd(std::move(config), std::move(inv), out, err);
    const std::string name = chosen->get_name();
    if (name == "gen-data") return cmd.gen_data();
    if (name == "gen-context") return cmd.gen_context();
    if (name == "train") return cmd.train();
    if (name == "eval") return cmd.eval();
    if (name == "compare") return cmd.compare();
    if (name == "grad-check") return cmd.grad_check();
    return cmd.report();
  } catch (const ConfigError& e) {
    fmt::print(err, "config error: {}\n", e.what());
    return kExitConfig;
  } catch (const AcceptanceFailure& e) {
    fmt::print(err, "acceptance failure: {}\n", e.what());
    return kExitAcceptance;
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitRuntime;
  }
}

}  // namespace genctx::harness
