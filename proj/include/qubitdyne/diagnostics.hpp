#pragma once

#include <functional>
#include <string>

namespace qubitdyne {

using WarningSink = std::function<void(const std::string&)>;

// Non-fatal conditions (ill-conditioned compensation, dropped heterodyne
// step, large loss per step) go through here. Default sink writes to stderr.
void warn(const std::string& message);

/// Replaces the process-wide sink and returns the previous one.
WarningSink set_warning_sink(WarningSink sink);

const char* library_version();

}  // namespace qubitdyne
