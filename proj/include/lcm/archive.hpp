#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace lcm::zip {

struct Entry {
  std::string name;
  std::vector<std::uint8_t> data;
};

// Deterministic zip writer: deflate (stored when that is no smaller), fixed
// 1980-01-01 timestamps, entries in the given order.
std::vector<std::uint8_t> write(const std::vector<Entry>& entries);

// Reads stored and deflated entries via the central directory. Throws
// MalformedArchive on any structural problem.
std::vector<Entry> read(std::span<const std::uint8_t> bytes);

}  // namespace lcm::zip
