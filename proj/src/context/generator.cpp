#include "genctx/context/generator.h"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <stdexcept>

namespace genctx::context {

namespace {

class OracleGenerator : public ContextGenerator {
 public:
  OracleGenerator(const OracleConfig& config, data::Lexicon lexicon)
      : config_(config), lexicon_(std::move(lexicon)) {}

  GeneratedContext generate(const GenerationRequest& r) override {
    ++calls_;
    return finish(r, oracle_generate(lexicon_, r.prompt, r.topic, r.source_key, config_));
  }
  std::string fingerprint() const override { return BackendConfig{BackendKind::Oracle, config_, {}}.fingerprint(); }

 private:
  OracleConfig config_;
  data::Lexicon lexicon_;
};

// Returns the source text unchanged, whatever the prompt.
class EchoGenerator : public ContextGenerator {
 public:
  GeneratedContext generate(const GenerationRequest& r) override {
    ++calls_;
    return finish(r, r.source_text);
  }
  std::string fingerprint() const override { return "echo"; }
};

class HttpGenerator : public ContextGenerator {
 public:
  explicit HttpGenerator(const HttpConfig& config) : config_(config) {}

  GeneratedContext generate(const GenerationRequest& r) override {
    ++calls_;
    return finish(r, http_generate(config_, render_prompt(r.prompt, r.source_text)));
  }
  std::string fingerprint() const override { return BackendConfig{BackendKind::Http, {}, config_}.fingerprint(); }

 private:
  HttpConfig config_;
};

}  // namespace

const char* backend_name(BackendKind kind) {
  switch (kind) {
    case BackendKind::Oracle: return "oracle";
    case BackendKind::Http: return "http";
    case BackendKind::Echo: return "echo";
  }
  return "?";
}

BackendKind parse_backend(const std::string& name) {
  if (name == "oracle") return BackendKind::Oracle;
  if (name == "http") return BackendKind::Http;
  if (name == "echo") return BackendKind::Echo;
  throw std::invalid_argument(fmt::format("unknown generator backend '{}' (oracle, http, echo)", name));
}

std::string BackendConfig::fingerprint() const {
  switch (kind) {
    case BackendKind::Oracle:
      return fmt::format("oracle:seed={};p_noise={};overlap={};free={}", oracle.seed, oracle.p_noise,
                         fmt::join(oracle.overlap, ","), fmt::join(oracle.free_words, ","));
    case BackendKind::Http:
      return fmt::format("http:{};model={}", http.endpoint, http.model);
    case BackendKind::Echo:
      return "echo";
  }
  return "?";
}

GeneratedContext ContextGenerator::finish(const GenerationRequest& r, const std::string& text) {
  GeneratedContext out;
  out.source_key = r.source_key;
  out.prompt = r.prompt;
  out.text = truncate_tokens(text, kMaxGeneratedTokens);
  out.tokens = count_tokens(out.text);
  out.backend = fingerprint();
  return out;
}

std::unique_ptr<ContextGenerator> make_generator(const BackendConfig& config, const data::Lexicon& lexicon) {
  switch (config.kind) {
    case BackendKind::Oracle: return std::make_unique<OracleGenerator>(config.oracle, lexicon);
    case BackendKind::Http: return std::make_unique<HttpGenerator>(config.http);
    case BackendKind::Echo: return std::make_unique<EchoGenerator>();
  }
  throw std::invalid_argument("unknown backend kind");
}

}  // namespace genctx::context
