#pragma once

#include <string>
#include <vector>

namespace planlab::store {

// Entry point behind the planlab binary; callable in-process from tests.
// Returns the process exit code; prints a single-line JSON error on failure.
auto cli_main(const std::vector<std::string>& args) -> int;

}  // namespace planlab::store
