#pragma once

#include <string_view>
#include <vector>

namespace figforge::agents {

/// System prompt text by name ("parser", "drawer", ...), embedded from the
/// versioned files under prompts/ at build time. Throws kInvalidArgument
/// for unknown names.
std::string_view prompt(std::string_view name);
std::vector<std::string_view> prompt_names();

}  // namespace figforge::agents
