#pragma once

#include <filesystem>

#include "genctx/data/corpus.h"

namespace genctx::data {

/// Writes `<path>` (one JSON header line, then one JSON record per segment)
/// and the feature container next to it at `<path>.features`.
void write_manifest(const StreamManifest& manifest, const std::filesystem::path& path);

/// Throws IoError, IntegrityError (truncated / checksum mismatch / malformed),
/// or FormatVersionError.
StreamManifest read_manifest(const std::filesystem::path& path);

std::filesystem::path features_path(const std::filesystem::path& manifest_path);

}  // namespace genctx::data
