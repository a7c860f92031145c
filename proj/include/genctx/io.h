#pragma once

#include <filesystem>
#include <string>

namespace genctx {

/// Whole-file read. Throws IoError.
std::string read_file(const std::filesystem::path& path);
/// Writes through a temporary sibling and renames it into place. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

}  // namespace genctx
