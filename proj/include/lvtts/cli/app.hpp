#pragma once

#include <string>
#include <vector>

namespace lvtts::cli {

// Exit codes: 0 success, 1 runtime failure, 2 bad config or usage,
// 3 missing prerequisite.
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitPrecondition = 3;

// args excludes the program name.
int run(const std::vector<std::string>& args);

}  // namespace lvtts::cli
