#include "genctx/context/cache.h"

#include <fmt/format.h>
#include <zlib.h>

#include <fstream>
#include <json.hpp>

#include "genctx/errors.h"
#include "genctx/io.h"

namespace genctx::context {

using nlohmann::json;

namespace {

std::uint32_t record_crc(const GeneratedContext& e) {
  const std::string canonical =
      fmt::format("{}\x1f{}\x1f{}\x1f{}\x1f{}", e.source_key, prompt_name(e.prompt), e.backend, e.tokens, e.text);
  return static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(canonical.data()), static_cast<uInt>(canonical.size())));
}

std::string to_record(const GeneratedContext& e) {
  return json{{"segment", e.source_key}, {"prompt", prompt_name(e.prompt)}, {"backend", e.backend},
              {"tokens", e.tokens},      {"text", e.text},                  {"crc32", record_crc(e)}}
      .dump();
}

}  // namespace

ContextCache::ContextCache(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.empty() || !std::filesystem::exists(path_)) return;
  const std::string content = read_file(path_);
  if (!content.empty() && content.back() != '\n') {
    throw IntegrityError(fmt::format("cache '{}' ends in a partial record", path_.string()));
  }
  std::size_t start = 0, line_no = 0;
  while (start < content.size()) {
    const std::size_t end = content.find('\n', start);
    const std::string line = content.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.empty()) continue;
    GeneratedContext e;
    std::uint32_t crc = 0;
    try {
      const json j = json::parse(line);
      e.source_key = j.at("segment").get<std::string>();
      e.prompt = parse_prompt(j.at("prompt").get<std::string>());
      e.backend = j.at("backend").get<std::string>();
      e.tokens = j.at("tokens").get<std::size_t>();
      e.text = j.at("text").get<std::string>();
      crc = j.at("crc32").get<std::uint32_t>();
    } catch (const std::exception& ex) {
      throw IntegrityError(fmt::format("cache '{}' line {} unreadable: {}", path_.string(), line_no, ex.what()));
    }
    if (crc != record_crc(e)) {
      throw IntegrityError(fmt::format("cache '{}' line {} fails its checksum", path_.string(), line_no));
    }
    entries_[{e.source_key, e.prompt, e.backend}] = std::move(e);
  }
}

std::optional<GeneratedContext> ContextCache::get(const std::string& source_key, PromptId prompt,
                                                  const std::string& backend) const {
  std::lock_guard lock(mutex_);
  const auto it = entries_.find({source_key, prompt, backend});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ContextCache::put(const GeneratedContext& entry) {
  std::lock_guard lock(mutex_);
  const Key key{entry.source_key, entry.prompt, entry.backend};
  if (const auto it = entries_.find(key); it != entries_.end()) {
    if (it->second == entry) return;
    throw std::logic_error(fmt::format("cache entry {} {} is immutable", entry.source_key, prompt_name(entry.prompt)));
  }
  if (!path_.empty()) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    if (!out) throw IoError(fmt::format("cannot append to cache '{}'", path_.string()));
    out << to_record(entry) << '\n';
    out.flush();
    if (!out) throw IoError(fmt::format("write to cache '{}' failed", path_.string()));
  }
  entries_.emplace(key, entry);
}

std::size_t ContextCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

GeneratedContext get_or_generate(ContextCache& cache, ContextGenerator& generator,
                                 const GenerationRequest& request) {
  const std::string backend = generator.fingerprint();
  if (auto hit = cache.get(request.source_key, request.prompt, backend)) return *hit;
  GeneratedContext fresh = generator.generate(request);
  cache.put(fresh);
  return fresh;
}

}  // namespace genctx::context
