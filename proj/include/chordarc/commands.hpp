#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "chordarc/config.hpp"

namespace chordarc {

// Exit codes shared by every command.
enum ExitCode : int { kExitOk = 0, kExitVerifyFailed = 1, kExitInvalidConfig = 2, kExitConstruction = 3 };

// Levels whose approximants run_inverse asks for at the initial c1.
std::vector<int> required_inverse_levels(const InverseParams& ip);

// Commands write their artifacts under cfg.output and a human-readable
// summary to `out`. Timings go only to <output>/run.log.
int cmd_check_curve(const RunConfig& cfg, std::ostream& out);
int cmd_direct(const RunConfig& cfg, std::ostream& out);
// dump_dir empty: <output>/approximants
int cmd_inverse(const RunConfig& cfg, const std::string& dump_dir, std::ostream& out);
int cmd_verify(const RunConfig& cfg, std::ostream& out);
// Rebuilds report.md and the plot from the JSON artifacts already on disk.
int cmd_report(const RunConfig& cfg, std::ostream& out);

// Runs body, mapping library errors to exit codes and printing the message
// to err.
int run_guarded(const std::function<int()>& body, std::ostream& err);

std::string dump_path(const std::string& dir, int level);

}  // namespace chordarc
