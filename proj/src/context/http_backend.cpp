#include "genctx/context/http_backend.h"

#include <fmt/format.h>
#include <httplib.h>

#include <json.hpp>
#include <sstream>

#include "genctx/errors.h"

namespace genctx::context {

namespace {

struct Endpoint {
  std::string base;  // scheme://host:port
  std::string path;
};

Endpoint split_endpoint(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos || url.compare(0, scheme, "http") != 0) {
    throw ConfigError(fmt::format("http endpoint must look like http://host:port/path, got '{}'", url));
  }
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

}  // namespace

std::string http_request_body(const std::string& prompt, std::size_t max_tokens) {
  return nlohmann::json{{"prompt", prompt}, {"max_tokens", max_tokens}, {"temperature", 0}}.dump();
}

std::string parse_http_response(const std::string& body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("generation response is not JSON: {}", e.what()));
  }
  if (!j.is_object() || !j.contains("text") || !j.at("text").is_string()) {
    throw ParseError("generation response has no string field 'text'");
  }
  return j.at("text").get<std::string>();
}

std::string truncate_tokens(const std::string& text, std::size_t max_tokens) {
  std::istringstream in(text);
  std::string word, out;
  for (std::size_t n = 0; n < max_tokens && in >> word; ++n) {
    if (!out.empty()) out += ' ';
    out += word;
  }
  return out;
}

std::size_t count_tokens(const std::string& text) {
  std::istringstream in(text);
  std::string word;
  std::size_t n = 0;
  while (in >> word) ++n;
  return n;
}

std::string http_generate(const HttpConfig& config, const std::string& prompt) {
  if (config.endpoint.empty()) throw ConfigError("http backend has no endpoint configured");
  if (config.retries < 0) throw ConfigError("http retries must be >= 0");
  const Endpoint ep = split_endpoint(config.endpoint);
  httplib::Client client(ep.base);
  const auto timeout = std::chrono::duration<double>(config.timeout_s);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));

  const std::string body = http_request_body(prompt, config.max_tokens);
  std::string last_error;
  for (int attempt = 0; attempt <= config.retries; ++attempt) {
    auto res = client.Post(ep.path, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = fmt::format("status {}", res->status);
      continue;
    }
    return truncate_tokens(parse_http_response(res->body), config.max_tokens);
  }
  throw TransportError(fmt::format("generation request to {} failed after {} attempt(s): {}", config.endpoint,
                                   config.retries + 1, last_error));
}

}  // namespace genctx::context
