#pragma once

#include <memory>

namespace spdlog {
class logger;
}

namespace lcm {

// Library-wide logger ("lcm"). Warnings for recoverable conditions such as
// degenerate triangles go here; callers may attach their own sinks.
std::shared_ptr<spdlog::logger> logger();

}  // namespace lcm
