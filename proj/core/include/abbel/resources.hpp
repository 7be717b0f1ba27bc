#pragma once

#include <optional>
#include <string_view>

namespace abbel {

// Files from core/data compiled into the library, keyed by their path
// relative to that directory (e.g. "prompts/wordle/instructions.txt").
std::optional<std::string_view> embedded_resource(std::string_view name);

}  // namespace abbel
