#pragma once

#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace rgbdseg::cli {

/// Runs one CLI invocation (`args` excludes the program name) and returns the
/// process exit status. Normal output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "480p" -> 640x480, "720p" -> 1280x720, "1080p" -> 1920x1080, "WxH" literal.
std::pair<int, int> parse_resolution(const std::string& name);

} // namespace rgbdseg::cli
