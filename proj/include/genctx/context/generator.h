#pragma once

#include <atomic>
#include <memory>
#include <string>

#include "genctx/context/http_backend.h"
#include "genctx/context/oracle.h"
#include "genctx/context/prompts.h"
#include "genctx/data/lexicon.h"

namespace genctx::context {

inline constexpr std::size_t kMaxGeneratedTokens = 256;

enum class BackendKind { Oracle, Http, Echo };
const char* backend_name(BackendKind kind);
BackendKind parse_backend(const std::string& name);

struct BackendConfig {
  BackendKind kind = BackendKind::Oracle;
  OracleConfig oracle;
  HttpConfig http;

  /// Identifies what produced a text: oracle settings, or endpoint + model.
  std::string fingerprint() const;
  bool operator==(const BackendConfig&) const = default;
};

/// One generation input: the source segment (index j = i-1) and its text.
struct GenerationRequest {
  std::string source_key;  // "stream/j", suffixed when the text is not ground truth
  int topic = 0;           // stream topic, used by the oracle only
  PromptId prompt = PromptId::P4;
  std::string source_text;
};

struct GeneratedContext {
  std::string source_key;
  PromptId prompt = PromptId::P4;
  std::string text;
  std::size_t tokens = 0;
  std::string backend;  // fingerprint

  bool operator==(const GeneratedContext&) const = default;
};

class ContextGenerator {
 public:
  virtual ~ContextGenerator() = default;
  virtual GeneratedContext generate(const GenerationRequest& request) = 0;
  virtual std::string fingerprint() const = 0;
  /// Backend calls made so far.
  std::size_t calls() const { return calls_.load(); }

 protected:
  GeneratedContext finish(const GenerationRequest& request, const std::string& text);
  std::atomic<std::size_t> calls_{0};
};

/// Builds the configured backend. The oracle needs the lexicon.
std::unique_ptr<ContextGenerator> make_generator(const BackendConfig& config, const data::Lexicon& lexicon);

}  // namespace genctx::context
