#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "flowmine/seq_model.hpp"
#include "flowmine/trace.hpp"

namespace flowmine {

struct Pattern {
  std::vector<EventType> events;
  // P(e_k | e_0..e_{k-1}) for k = 1..n-1.
  std::vector<double> step_probs;

  std::size_t length() const { return events.size(); }
};

enum class InitiatingMode {
  Seed,    // restrict length-1 candidates
  PostHoc, // mine everything, then drop patterns not starting with one
};

struct MinerParams {
  double theta = 0.2;
  double theta_prime = 0.2;
  int max_len = 8;
  bool causality_filter = false;
  bool initiating_filter = false;
  InitiatingMode initiating_mode = InitiatingMode::Seed;

  void check() const;
};

/// Events never causally preceded (strictly earlier timestep, receiver equal
/// to their sender) anywhere in any of the traces.
std::set<EventType> detect_initiating_events(std::span<const Trace> traces);

using ModelSuite = std::map<int, const SequenceModel *>;

/// Chained extraction over the per-length models, lengths 2..max_len.
/// Result is sorted by event sequence.
std::vector<Pattern> mine(const ModelSuite &models, const Vocabulary &vocab,
                          const MinerParams &params,
                          const std::optional<std::set<EventType>> &initiating = std::nullopt,
                          Exec exec = Exec::Parallel);

/// Union by event sequence; a duplicate keeps the larger step_probs record.
std::vector<Pattern> merge_patterns(std::vector<Pattern> patterns);

nlohmann::ordered_json pattern_to_json(const Pattern &p);
Pattern pattern_from_json(const nlohmann::json &j);
void write_patterns(const std::vector<Pattern> &patterns, std::ostream &out);
std::vector<Pattern> read_patterns(std::istream &in);

} // namespace flowmine
