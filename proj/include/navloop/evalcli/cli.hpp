// Copyright 2026 The navloop Authors. Apache 2.0 License.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "navloop/scenes/scene.hpp"

namespace navloop::eval {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// A bundled suite name ("training", "few-shot", "zero-shot", "desk") or a
/// path to a single scene JSON file.
std::vector<scenes::SceneSpec> resolve_suite(const std::string& name_or_path);

/// Entry point of the `navloop` tool; returns the process exit code.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace navloop::eval
