#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>

#include "genctx/context/generator.h"

namespace genctx::context {

/// Append-only file of generated texts, one JSON record per line, each with
/// its own crc32. Entries never change once written.
class ContextCache {
 public:
  using Key = std::tuple<std::string, PromptId, std::string>;  // source segment, prompt, backend

  /// Opens (and loads) the file at `path`; an empty path keeps the cache in
  /// memory only. Throws IntegrityError on a corrupted or truncated record.
  explicit ContextCache(std::filesystem::path path = {});

  std::optional<GeneratedContext> get(const std::string& source_key, PromptId prompt,
                                      const std::string& backend) const;
  /// Throws std::logic_error if the key already holds a different text.
  void put(const GeneratedContext& entry);
  std::size_t size() const;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::map<Key, GeneratedContext> entries_;
};

/// Cache hit short-circuits; a miss generates, persists and returns.
GeneratedContext get_or_generate(ContextCache& cache, ContextGenerator& generator,
                                 const GenerationRequest& request);

}  // namespace genctx::context
