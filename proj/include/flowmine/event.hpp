#pragma once

#include <compare>
#include <cstddef>
#include <functional>
#include <string>

#include <json.hpp>

namespace flowmine {

/// Static identity of a message: who sent which command to whom.
/// This triple is the unit of the mining vocabulary.
struct EventType {
  std::string src;
  std::string dest;
  std::string cmd;

  auto operator<=>(const EventType &) const = default;
  bool operator==(const EventType &) const = default;

  std::string str() const { return src + ":" + dest + ":" + cmd; }
};

/// Causality between consecutive events: the first one's receiver
/// is the second one's sender.
inline bool causality_ok(const EventType &first, const EventType &second) {
  return first.dest == second.src;
}

void to_json(nlohmann::json &j, const EventType &e);
void from_json(const nlohmann::json &j, EventType &e);

} // namespace flowmine

template <> struct std::hash<flowmine::EventType> {
  std::size_t operator()(const flowmine::EventType &e) const noexcept {
    std::hash<std::string> h;
    std::size_t seed = h(e.src);
    seed ^= h(e.dest) + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2);
    seed ^= h(e.cmd) + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2);
    return seed;
  }
};
