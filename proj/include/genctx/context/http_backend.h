#pragma once

#include <string>

namespace genctx::context {

struct HttpConfig {
  std::string endpoint;  // e.g. http://127.0.0.1:8080/generate
  std::string model;     // declared model name; part of the cache fingerprint
  double timeout_s = 30.0;
  int retries = 2;       // extra attempts after the first failure
  std::size_t max_tokens = 256;

  bool operator==(const HttpConfig&) const = default;
};

/// Request body sent for one prompt: {"prompt", "max_tokens", "temperature": 0}.
std::string http_request_body(const std::string& prompt, std::size_t max_tokens);

/// Extracts "text" from a response body. Throws ParseError.
std::string parse_http_response(const std::string& body);

/// POSTs the prompt and returns the completion truncated to
/// `max_tokens` whitespace tokens. Throws TransportError after the retries
/// are spent, ParseError on a malformed body, ConfigError on a bad endpoint.
std::string http_generate(const HttpConfig& config, const std::string& prompt);

/// First `max_tokens` whitespace tokens, joined by single spaces.
std::string truncate_tokens(const std::string& text, std::size_t max_tokens);
std::size_t count_tokens(const std::string& text);

}  // namespace genctx::context
