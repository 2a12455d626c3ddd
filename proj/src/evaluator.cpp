#include "flowmine/evaluator.hpp"

#include <algorithm>
#include <iomanip>

#include "flowmine/error.hpp"

namespace flowmine {

namespace {

bool all_unique(const EventSeq &s) {
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = i + 1; j < s.size(); ++j)
      if (s[i] == s[j])
        return false;
  return true;
}

void choose(const Execution &ex, std::size_t k, std::size_t from, EventSeq &cur,
            std::set<EventSeq> &out) {
  if (cur.size() == k) {
    if (all_unique(cur))
      out.insert(cur);
    return;
  }
  for (std::size_t i = from; i + (k - cur.size()) <= ex.size(); ++i) {
    if (std::find(cur.begin(), cur.end(), ex[i]) != cur.end())
      continue;
    cur.push_back(ex[i]);
    choose(ex, k, i + 1, cur, out);
    cur.pop_back();
  }
}

bool is_subsequence(std::span<const EventType> needle, const Execution &hay) {
  std::size_t j = 0;
  for (std::size_t i = 0; i < hay.size() && j < needle.size(); ++i)
    if (hay[i] == needle[j])
      ++j;
  return j == needle.size();
}

} // namespace

GroundTruth ground_truth_from_executions(std::span<const Execution> executions, int max_len) {
  if (max_len < 2 || max_len > kMaxUniversePatternLength)
    throw ConfigError("universe pattern length must be in [2, " +
                      std::to_string(kMaxUniversePatternLength) + "]");
  GroundTruth gt;
  for (const auto &ex : executions) {
    if (ex.size() > kMaxUniverseExecutionLength)
      throw DataError("execution of length " + std::to_string(ex.size()) +
                      " exceeds the universe guard of " +
                      std::to_string(kMaxUniverseExecutionLength));
    gt.executions.insert(ex);
  }
  for (int k = 2; k <= max_len; ++k) {
    auto &u = gt.valid_universe[k];
    for (const auto &ex : gt.executions) {
      EventSeq cur;
      choose(ex, static_cast<std::size_t>(k), 0, cur, u);
    }
  }
  return gt;
}

GroundTruth build_ground_truth(const std::vector<Flow> &flows, std::size_t max_steps,
                               int max_len) {
  std::vector<Execution> all;
  for (const auto &f : flows) {
    auto report = validate_flow(f, max_steps);
    for (const auto &v : report)
      if (v.severity == Violation::Severity::Error)
        throw FlowError(f.name, v.message);
    auto ex = enumerate_executions(f, max_steps);
    all.insert(all.end(), ex.begin(), ex.end());
  }
  return ground_truth_from_executions(all, max_len);
}

bool is_valid(std::span<const EventType> seq, const GroundTruth &gt) {
  return std::any_of(gt.executions.begin(), gt.executions.end(),
                     [&](const Execution &ex) { return is_subsequence(seq, ex); });
}

const ReportRow &MiningReport::row(int length) const {
  for (const auto &r : rows)
    if (r.length == length)
      return r;
  throw InputError("no report row for length " + std::to_string(length));
}

std::size_t MiningReport::total_valid_found() const {
  std::size_t n = 0;
  for (const auto &r : rows)
    n += r.valid_found;
  return n;
}

MiningReport classify(std::span<const Pattern> mined, const GroundTruth &gt, int max_len) {
  MiningReport rep;
  std::map<int, std::set<EventSeq>> by_len;
  for (const auto &p : mined)
    by_len[static_cast<int>(p.length())].insert(p.events);

  for (int k = 2; k <= max_len; ++k) {
    const auto uit = gt.valid_universe.find(k);
    const std::set<EventSeq> empty;
    const auto &universe = uit == gt.valid_universe.end() ? empty : uit->second;
    auto &vf = rep.valid_found[k];
    auto &ivf = rep.invalid_found[k];
    auto &vnf = rep.valid_not_found[k];
    for (const auto &s : by_len[k]) {
      if (universe.count(s))
        vf.insert(s);
      else
        ivf.insert(s);
    }
    std::set_difference(universe.begin(), universe.end(), vf.begin(), vf.end(),
                        std::inserter(vnf, vnf.end()));
    rep.rows.push_back({k, vf.size(), ivf.size(), vnf.size()});
  }
  return rep;
}

void write_report_csv(const MiningReport &r, std::ostream &out) {
  out << "length,V_F,IV_F,V_NF\n";
  for (const auto &row : r.rows)
    out << row.length << ',' << row.valid_found << ',' << row.invalid_found << ','
        << row.valid_not_found << '\n';
}

void write_report_table(const MiningReport &r, std::ostream &out) {
  auto line = [&](const std::string &label, auto get) {
    out << std::left << std::setw(8) << label << std::right;
    for (const auto &row : r.rows)
      out << std::setw(7) << get(row);
    out << '\n';
  };
  line("Length", [](const ReportRow &x) { return static_cast<std::size_t>(x.length); });
  line("V&F", [](const ReportRow &x) { return x.valid_found; });
  line("IV&F", [](const ReportRow &x) { return x.invalid_found; });
  line("V&NF", [](const ReportRow &x) { return x.valid_not_found; });
}

} // namespace flowmine
