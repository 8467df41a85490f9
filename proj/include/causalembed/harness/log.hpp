#pragma once

#include <string>

namespace causalembed::harness {

enum class LogLevel { error = 0, info = 1, debug = 2 };

// Level comes from CAUSAL_EMBED_LOG in {error, info, debug}; default error.
LogLevel log_level();

void log_error(const std::string& message);
void log_info(const std::string& message);
void log_debug(const std::string& message);

}  // namespace causalembed::harness
