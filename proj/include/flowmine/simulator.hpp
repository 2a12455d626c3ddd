#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "flowmine/flow.hpp"
#include "flowmine/trace.hpp"

namespace flowmine {

struct Initiator {
  std::string component;
  std::vector<std::string> flows; // names of flows this block may start
};

struct SimConfig {
  std::vector<Initiator> initiators;
  int instances_per_initiator = 100;
  int delay_min = 1;
  int delay_max = 10;
  std::uint64_t seed = 1;
  std::uint64_t address_pool = 16;

  void check() const;
};

struct ProvenanceRecord {
  std::size_t step;
  EventInstance event;
  int instance;
  std::string flow;
};

struct SimResult {
  Trace trace;
  // One record per emitted event, ordered like the canonical trace file.
  std::vector<ProvenanceRecord> provenance;
};

/// Runs every initiator's flow instances concurrently, one transition per
/// cycle per live instance. Deterministic in (flows, cfg).
SimResult simulate(const std::vector<Flow> &flows, const SimConfig &cfg);

/// Execution sets keyed by flow name.
std::map<std::string, std::vector<Execution>>
ground_truth(const std::vector<Flow> &flows, std::size_t max_steps = kDefaultMaxSteps);

void write_provenance(const std::vector<ProvenanceRecord> &prov, std::ostream &out);
std::vector<ProvenanceRecord> read_provenance(std::istream &in);

} // namespace flowmine
