#pragma once

#include <map>
#include <ostream>
#include <set>
#include <span>
#include <vector>

#include "flowmine/flow.hpp"
#include "flowmine/miner.hpp"

namespace flowmine {

inline constexpr std::size_t kMaxUniverseExecutionLength = 16;
inline constexpr int kMaxUniversePatternLength = 8;

using EventSeq = std::vector<EventType>;

struct GroundTruth {
  std::set<EventSeq> executions;
  // Per length k: every unique-event, order-preserving k-subsequence of
  // some execution.
  std::map<int, std::set<EventSeq>> valid_universe;
};

GroundTruth ground_truth_from_executions(std::span<const Execution> executions, int max_len);
GroundTruth build_ground_truth(const std::vector<Flow> &flows, std::size_t max_steps,
                               int max_len);

/// True iff `seq` is an order-preserving subsequence of some execution.
bool is_valid(std::span<const EventType> seq, const GroundTruth &gt);
inline bool is_valid(const Pattern &p, const GroundTruth &gt) { return is_valid(p.events, gt); }

struct ReportRow {
  int length;
  std::size_t valid_found;
  std::size_t invalid_found;
  std::size_t valid_not_found;
};

struct MiningReport {
  std::vector<ReportRow> rows; // lengths 2..max_len
  std::map<int, std::set<EventSeq>> valid_found, invalid_found, valid_not_found;

  const ReportRow &row(int length) const;
  std::size_t total_valid_found() const;
};

MiningReport classify(std::span<const Pattern> mined, const GroundTruth &gt, int max_len);

/// Columns length,V_F,IV_F,V_NF.
void write_report_csv(const MiningReport &r, std::ostream &out);
/// Aligned table in the Length / V&F / IV&F / V&NF layout.
void write_report_table(const MiningReport &r, std::ostream &out);

} // namespace flowmine
