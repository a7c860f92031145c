#pragma once

#include <array>
#include <string>
#include <string_view>

namespace genctx::context {

enum class PromptId { P1 = 0, P2 = 1, P3 = 2, P4 = 3 };

inline constexpr std::array<PromptId, 4> kAllPrompts = {PromptId::P1, PromptId::P2, PromptId::P3, PromptId::P4};

/// Exact template text of a prompt.
std::string_view prompt_template(PromptId id);
const char* prompt_name(PromptId id);
/// "P1".."P4" (case-insensitive). Throws std::invalid_argument otherwise.
PromptId parse_prompt(std::string_view name);

/// Template, one space, then the previous text.
std::string render_prompt(PromptId id, std::string_view prev_text);

}  // namespace genctx::context
