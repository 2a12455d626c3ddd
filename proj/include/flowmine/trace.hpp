#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "flowmine/event.hpp"

namespace flowmine {

using Address = std::uint64_t;

/// One observed message: its static identity plus the optional address payload.
struct EventInstance {
  EventType etype;
  std::optional<Address> addr;

  auto operator<=>(const EventInstance &) const = default;
  bool operator==(const EventInstance &) const = default;
};

/// Events observed in the same cycle. Order inside a step carries no meaning;
/// duplicates are kept.
using TimeStep = std::vector<EventInstance>;

struct Trace {
  std::vector<TimeStep> steps;

  std::size_t event_count() const;
  bool operator==(const Trace &) const = default;
};

Trace read_trace(std::istream &in);
void write_trace(const Trace &trace, std::ostream &out);
Trace load_trace(const std::filesystem::path &path);
void save_trace(const Trace &trace, const std::filesystem::path &path);

/// Copy of `step` in canonical (src, dest, cmd, addr) order.
TimeStep canonical_step(const TimeStep &step);

/// Steps in order, each step in canonical order, addr kept.
std::vector<EventInstance> linearize_instances(const Trace &trace);
/// Same as linearize_instances with addr dropped.
std::vector<EventType> linearize(const Trace &trace);

class Vocabulary {
public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<EventType> events);

  std::size_t size() const { return events_.size(); }
  const std::vector<EventType> &events() const { return events_; }
  const EventType &decode(int index) const;
  std::optional<int> find(const EventType &e) const;
  int encode(const EventType &e) const;
  std::vector<int> encode(std::span<const EventType> seq) const;

  bool operator==(const Vocabulary &o) const { return events_ == o.events_; }

private:
  std::vector<EventType> events_;
  std::unordered_map<EventType, int> index_;
};

/// {"src","dest","cmd"[,"addr"]} with keys in that order.
nlohmann::ordered_json event_json(const EventType &e, std::optional<Address> addr = std::nullopt);

Vocabulary build_vocabulary(std::span<const Trace> traces);
Vocabulary build_vocabulary(std::span<const std::vector<EventType>> sequences);

nlohmann::ordered_json vocabulary_to_json(const Vocabulary &v);
Vocabulary vocabulary_from_json(const nlohmann::json &j);

} // namespace flowmine
