#include "genctx/context/prompts.h"

#include <fmt/format.h>

#include <cctype>
#include <stdexcept>

namespace genctx::context {

std::string_view prompt_template(PromptId id) {
  switch (id) {
    case PromptId::P1: return "Provide a next sentence for the given text:";
    case PromptId::P2: return "This is part of the answer. Can you predict what was the question? text :";
    case PromptId::P3: return "Predict topic of the given text:";
    case PromptId::P4: return "Predict title of the given text:";
  }
  throw std::invalid_argument("unknown prompt id");
}

const char* prompt_name(PromptId id) {
  static constexpr const char* names[] = {"P1", "P2", "P3", "P4"};
  const auto i = static_cast<std::size_t>(id);
  if (i >= 4) throw std::invalid_argument("unknown prompt id");
  return names[i];
}

PromptId parse_prompt(std::string_view name) {
  if (name.size() == 2 && std::toupper(static_cast<unsigned char>(name[0])) == 'P' && name[1] >= '1' &&
      name[1] <= '4') {
    return static_cast<PromptId>(name[1] - '1');
  }
  throw std::invalid_argument(fmt::format("unknown prompt '{}' (P1..P4)", name));
}

std::string render_prompt(PromptId id, std::string_view prev_text) {
  std::string out(prompt_template(id));
  out += ' ';
  out += prev_text;
  return out;
}

}  // namespace genctx::context
