#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowmine/event.hpp"

namespace flowmine {

using PlaceSet = std::set<std::string>;

struct Transition {
  std::string id;
  PlaceSet preset;
  PlaceSet postset;
};

/// A set of marked places. Nets are 1-safe, so a set is enough.
struct Marking {
  PlaceSet places;

  bool operator==(const Marking &) const = default;
  auto operator<=>(const Marking &) const = default;
};

/// A system flow: a labeled Petri net with an initial and an end marking.
struct Flow {
  std::string name;
  PlaceSet places;
  std::vector<Transition> transitions;
  std::map<std::string, EventType> labeling; // transition id -> event
  PlaceSet initial_marking;
  PlaceSet end_marking;
  // Whether instances of this flow carry an address payload.
  bool addressed = true;

  const Transition &transition(const std::string &id) const;
  const EventType &label(const Transition &t) const;

  /// Events of transitions whose preset lies inside the initial marking.
  std::set<EventType> start_events() const;
};

using Execution = std::vector<EventType>;
using FiringSequence = std::vector<std::string>; // transition ids

inline constexpr std::size_t kDefaultMaxSteps = 64;

struct Violation {
  enum class Severity { Error, Warning };
  Severity severity;
  std::string message;
};

/// Structural and behavioural checks. Warnings are reported alongside errors;
/// the list is empty only for a fully well-formed flow.
std::vector<Violation> validate_flow(const Flow &flow,
                                     std::size_t max_steps = kDefaultMaxSteps);
bool has_errors(const std::vector<Violation> &report);

std::vector<const Transition *> enabled(const Flow &flow, const Marking &marking);
Marking fire(const Flow &flow, const Marking &marking, const Transition &t);

/// All firing sequences t0..tn with s0 ⊆ •t0, •ti ⊆ t(i-1)•, tn• ⊆ s⊥.
/// A path that revisits a marking is dropped; a path longer than max_steps
/// raises FlowError ("possibly unbounded flow").
std::vector<FiringSequence>
enumerate_firing_sequences(const Flow &flow,
                           std::size_t max_steps = kDefaultMaxSteps);

/// Distinct event sequences induced by enumerate_firing_sequences, sorted.
std::vector<Execution>
enumerate_executions(const Flow &flow, std::size_t max_steps = kDefaultMaxSteps);

Flow flow_from_json(const nlohmann::json &j);
nlohmann::json flow_to_json(const Flow &flow);
Flow load_flow(const std::filesystem::path &path);

} // namespace flowmine
