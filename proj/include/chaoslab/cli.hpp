#pragma once

// Command-line front end. `dispatch` parses one invocation, runs it and
// writes artifacts; it never calls exit(), so tests can drive it directly.
//
// Exit codes: 0 success, 1 runtime error, 2 usage error.

#include <iosfwd>
#include <span>
#include <string>

namespace chaoslab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// args[0] is the program name.
int dispatch(std::span<const std::string> args, std::ostream& out, std::ostream& err);
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace chaoslab::cli
