#include "genctx/harness/config.h"

#include <fmt/format.h>

#include <sstream>

#include "genctx/autodiff/checkpoint.h"
#include "genctx/data/json_io.h"
#include "genctx/errors.h"
#include "genctx/io.h"

namespace genctx::harness {

using nlohmann::json;

namespace {

const char* json_kind(const json& v) {
  if (v.is_object()) return "object";
  if (v.is_array()) return "array";
  if (v.is_string()) return "string";
  if (v.is_boolean()) return "boolean";
  if (v.is_number_float()) return "number";
  if (v.is_number()) return "integer";
  return "null";
}

void check_type(const json& base, const json& value, const std::string& key) {
  bool ok = false;
  if (base.is_number_float()) {
    ok = value.is_number();
  } else if (base.is_number_unsigned()) {
    ok = value.is_number_unsigned();
    if (value.is_number_integer() && !ok) {
      throw ConfigError(fmt::format("config key '{}' must be non-negative", key));
    }
  } else if (base.is_number_integer()) {
    ok = value.is_number_integer();
  } else {
    ok = std::string(json_kind(base)) == json_kind(value);
  }
  if (!ok) {
    throw ConfigError(fmt::format("config key '{}' expects {}, got {}", key, json_kind(base), json_kind(value)));
  }
}

void merge_strict(json& base, const json& incoming, const std::string& prefix) {
  if (!incoming.is_object()) throw ConfigError(fmt::format("config section '{}' must be an object", prefix));
  for (const auto& [key, value] : incoming.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!base.contains(key)) throw ConfigError(fmt::format("unknown config key '{}'", path));
    json& slot = base[key];
    if (slot.is_object()) {
      merge_strict(slot, value, path);
    } else {
      check_type(slot, value, path);
      slot = value;
    }
  }
}

void collect_leaves(const json& j, const std::string& prefix, std::vector<std::string>& out) {
  for (const auto& [key, value] : j.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (value.is_object()) {
      collect_leaves(value, path, out);
    } else {
      out.push_back(path);
    }
  }
}

std::string resolve_key(const json& base, const std::string& key) {
  std::vector<std::string> leaves;
  collect_leaves(base, "", leaves);
  for (const std::string& leaf : leaves) {
    if (leaf == key) return leaf;
  }
  std::vector<std::string> matches;
  for (const std::string& leaf : leaves) {
    const auto dot = leaf.rfind('.');
    if (leaf.substr(dot == std::string::npos ? 0 : dot + 1) == key) matches.push_back(leaf);
  }
  if (matches.size() == 1) return matches.front();
  if (matches.empty()) throw ConfigError(fmt::format("unknown config key '{}'", key));
  throw ConfigError(fmt::format("config key '{}' is ambiguous ({} and others); use the dotted path", key,
                                matches.front()));
}

json parse_override(const json& base, const std::string& key, const std::string& text) {
  if (base.is_string()) return text;
  if (base.is_boolean()) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw ConfigError(fmt::format("config key '{}' expects true/false, got '{}'", key, text));
  }
  if (base.is_array() && (text.empty() || text.front() != '[')) {
    json arr = json::array();
    std::stringstream ss(text);
    std::string item;
    const bool numeric = !base.empty() && base.front().is_number();
    while (std::getline(ss, item, ',')) {
      if (numeric) {
        try {
          arr.push_back(json::parse(item));
        } catch (const json::exception&) {
          throw ConfigError(fmt::format("config key '{}' expects numbers, got '{}'", key, item));
        }
      } else {
        arr.push_back(item);
      }
    }
    return arr;
  }
  try {
    return json::parse(text);
  } catch (const json::exception&) {
    throw ConfigError(fmt::format("config key '{}' cannot parse value '{}'", key, text));
  }
}

template <typename T>
T get_as(const json& j, const char* key, const std::string& section) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("config key '{}.{}': {}", section, key, e.what()));
  }
}

template <typename F>
auto parse_enum(const json& j, const char* key, const std::string& section, F&& parse) {
  try {
    return parse(get_as<std::string>(j, key, section));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(fmt::format("config key '{}.{}': {}", section, key, e.what()));
  }
}

json model_json(const models::ModelConfig& c) {
  json j = models::to_json(c);
  j.erase("d_feat");  // taken from the corpus
  j.erase("text_vocab");
  j.erase("output_size");
  return j;
}

}  // namespace

const char* context_source_name(ContextSource s) {
  return s == ContextSource::GroundTruth ? "ground_truth" : "decoded";
}

std::filesystem::path DataSection::train_path() const {
  return train.empty() ? std::filesystem::path(dir) / "train.jsonl" : std::filesystem::path(train);
}

std::filesystem::path DataSection::eval_path() const {
  return eval.empty() ? std::filesystem::path(dir) / "eval.jsonl" : std::filesystem::path(eval);
}

std::filesystem::path AppConfig::cache_path() const {
  return context.cache.empty() ? std::filesystem::path(output_dir) / "contexts.cache"
                               : std::filesystem::path(context.cache);
}

json to_json(const AppConfig& c) {
  json variants = json::array();
  for (auto v : c.compare.variants) variants.push_back(models::variant_name(v));
  const auto& o = c.context.backend.oracle;
  const auto& h = c.context.backend.http;
  return json{
      {"corpus", data::to_json(c.corpus)},
      {"data", {{"dir", c.data.dir}, {"train", c.data.train}, {"eval", c.data.eval}}},
      {"model", model_json(c.model)},
      {"context",
       {{"prompt", context::prompt_name(c.context.prompt)},
        {"backend", context::backend_name(c.context.backend.kind)},
        {"cache", c.context.cache},
        {"oracle", {{"p_noise", o.p_noise}, {"seed", o.seed}, {"overlap", o.overlap}, {"free_words", o.free_words}}},
        {"http",
         {{"endpoint", h.endpoint}, {"model", h.model}, {"timeout_s", h.timeout_s}, {"retries", h.retries}}}}},
      {"loss",
       {{"alpha", c.loss.alpha},
        {"context_kind", c.loss.context_kind == losses::ContextLossKind::Norm ? "norm" : "squared_norm"}}},
      {"optim",
       {{"learning_rate", c.optim.learning_rate},
        {"beta1", c.optim.beta1},
        {"beta2", c.optim.beta2},
        {"epsilon", c.optim.epsilon},
        {"clip_norm", c.optim.clip_norm}}},
      {"train",
       {{"variant", models::variant_name(c.train.variant)},
        {"steps", c.train.steps},
        {"batch_size", c.train.batch_size},
        {"seeds", c.train.seeds},
        {"checkpoints", c.train.checkpoints},
        {"teacher_checkpoint", c.train.teacher_checkpoint}}},
      {"eval",
       {{"checkpoint", c.eval.checkpoint},
        {"split", c.eval.split},
        {"context_source", context_source_name(c.eval.context_source)}}},
      {"compare", {{"variants", variants}, {"check_ordering", c.compare.check_ordering}}},
      {"output_dir", c.output_dir}};
}

AppConfig config_from_json(const json& incoming) {
  json j = to_json(AppConfig{});
  merge_strict(j, incoming, "");

  AppConfig c;
  c.corpus = data::corpus_config_from_json(j.at("corpus"));

  const json& d = j.at("data");
  c.data.dir = get_as<std::string>(d, "dir", "data");
  c.data.train = get_as<std::string>(d, "train", "data");
  c.data.eval = get_as<std::string>(d, "eval", "data");

  c.model = models::model_config_from_json(j.at("model"));
  c.model.d_feat = c.corpus.d_feat;

  const json& cx = j.at("context");
  c.context.prompt = parse_enum(cx, "prompt", "context", context::parse_prompt);
  c.context.backend.kind = parse_enum(cx, "backend", "context", context::parse_backend);
  c.context.cache = get_as<std::string>(cx, "cache", "context");
  const json& o = cx.at("oracle");
  c.context.backend.oracle.p_noise = get_as<double>(o, "p_noise", "context.oracle");
  c.context.backend.oracle.seed = get_as<std::uint64_t>(o, "seed", "context.oracle");
  c.context.backend.oracle.overlap = get_as<std::array<double, 4>>(o, "overlap", "context.oracle");
  c.context.backend.oracle.free_words = get_as<std::array<std::size_t, 4>>(o, "free_words", "context.oracle");
  const json& h = cx.at("http");
  c.context.backend.http.endpoint = get_as<std::string>(h, "endpoint", "context.http");
  c.context.backend.http.model = get_as<std::string>(h, "model", "context.http");
  c.context.backend.http.timeout_s = get_as<double>(h, "timeout_s", "context.http");
  c.context.backend.http.retries = get_as<int>(h, "retries", "context.http");

  const json& l = j.at("loss");
  c.loss.alpha = get_as<double>(l, "alpha", "loss");
  const auto kind = get_as<std::string>(l, "context_kind", "loss");
  if (kind == "norm") {
    c.loss.context_kind = losses::ContextLossKind::Norm;
  } else if (kind == "squared_norm") {
    c.loss.context_kind = losses::ContextLossKind::SquaredNorm;
  } else {
    throw ConfigError(fmt::format("config key 'loss.context_kind': unknown value '{}' (norm, squared_norm)", kind));
  }

  const json& op = j.at("optim");
  c.optim.learning_rate = get_as<double>(op, "learning_rate", "optim");
  c.optim.beta1 = get_as<double>(op, "beta1", "optim");
  c.optim.beta2 = get_as<double>(op, "beta2", "optim");
  c.optim.epsilon = get_as<double>(op, "epsilon", "optim");
  c.optim.clip_norm = get_as<double>(op, "clip_norm", "optim");

  const json& t = j.at("train");
  c.train.variant = parse_enum(t, "variant", "train", models::parse_variant);
  c.train.steps = get_as<std::size_t>(t, "steps", "train");
  c.train.batch_size = get_as<std::size_t>(t, "batch_size", "train");
  c.train.seeds = get_as<std::vector<std::uint64_t>>(t, "seeds", "train");
  c.train.checkpoints = get_as<std::size_t>(t, "checkpoints", "train");
  c.train.teacher_checkpoint = get_as<std::string>(t, "teacher_checkpoint", "train");

  const json& e = j.at("eval");
  c.eval.checkpoint = get_as<std::string>(e, "checkpoint", "eval");
  c.eval.split = get_as<std::string>(e, "split", "eval");
  const auto source = get_as<std::string>(e, "context_source", "eval");
  if (source == "ground_truth") {
    c.eval.context_source = ContextSource::GroundTruth;
  } else if (source == "decoded") {
    c.eval.context_source = ContextSource::Decoded;
  } else {
    throw ConfigError(fmt::format("config key 'eval.context_source': unknown value '{}' (ground_truth, decoded)", source));
  }

  const json& cmp = j.at("compare");
  c.compare.variants.clear();
  for (const auto& name : get_as<std::vector<std::string>>(cmp, "variants", "compare")) {
    try {
      c.compare.variants.push_back(models::parse_variant(name));
    } catch (const std::invalid_argument& ex) {
      throw ConfigError(fmt::format("config key 'compare.variants': {}", ex.what()));
    }
  }
  c.compare.check_ordering = get_as<bool>(cmp, "check_ordering", "compare");
  c.output_dir = j.at("output_dir").get<std::string>();
  validate(c);
  return c;
}

AppConfig load_config(const std::optional<std::filesystem::path>& path,
                      const std::vector<std::pair<std::string, std::string>>& overrides) {
  json merged = to_json(AppConfig{});
  if (path) {
    json file;
    try {
      file = json::parse(read_file(*path));
    } catch (const json::exception& e) {
      throw ConfigError(fmt::format("config file '{}' is not valid JSON: {}", path->string(), e.what()));
    } catch (const IoError& e) {
      throw ConfigError(e.what());
    }
    merge_strict(merged, file, "");
  }
  for (const auto& [raw_key, text] : overrides) {
    const std::string key = resolve_key(merged, raw_key);
    json::json_pointer ptr("/" + [&] {
      std::string p = key;
      for (char& ch : p) {
        if (ch == '.') ch = '/';
      }
      return p;
    }());
    json& slot = merged.at(ptr);
    json value = parse_override(slot, key, text);
    check_type(slot, value, key);
    slot = std::move(value);
  }
  return config_from_json(merged);
}

std::string config_fingerprint(const AppConfig& config) {
  return fmt::format("{:08x}", ad::crc32_of(to_json(config).dump()));
}

void require_field(const std::string& value, const std::string& key) {
  if (value.empty()) throw ConfigError(fmt::format("missing required field {}", key));
}

void validate(const AppConfig& c) {
  try {
    data::validate(c.corpus);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(fmt::format("corpus: {}", e.what()));
  }
  if (!(c.loss.alpha >= 0.0)) throw ConfigError("loss.alpha must be >= 0");
  if (c.train.seeds.empty()) throw ConfigError("train.seeds must not be empty");
  if (c.train.batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (!(c.optim.learning_rate > 0.0)) throw ConfigError("optim.learning_rate must be positive");
  const auto& o = c.context.backend.oracle;
  if (!(o.p_noise >= 0.0 && o.p_noise <= 1.0)) throw ConfigError("context.oracle.p_noise must lie in [0, 1]");
  for (double r : o.overlap) {
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("context.oracle.overlap entries must lie in [0, 1]");
  }
  if (c.context.backend.http.retries < 0) throw ConfigError("context.http.retries must be >= 0");
  if (c.model.d_model == 0 || c.model.d_text == 0) throw ConfigError("model widths must be positive");
  if (c.compare.variants.empty()) throw ConfigError("compare.variants must not be empty");
}

}  // namespace genctx::harness
