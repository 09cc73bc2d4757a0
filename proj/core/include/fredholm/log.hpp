#pragma once

#include <functional>
#include <string_view>

namespace fredholm::log {

using Sink = std::function<void(std::string_view)>;

/// Replace the warning sink. Passing nullptr restores the stderr default.
void set_warning_sink(Sink sink);

void warn(std::string_view message);

}  // namespace fredholm::log
