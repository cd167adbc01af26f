#pragma once

#include <string>
#include <vector>

namespace tiode::cli {

// Entry point shared by the tool binary and in-process tests.
// Subcommands: generate, train, eval, ablate, robustness, diagnose.
// Returns 0 on success, 1 on numeric/IO failure, 2 on usage errors.
int run(const std::vector<std::string>& args);

}  // namespace tiode::cli
