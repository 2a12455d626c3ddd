#include "doctest.h"

#include <random>
#include <sstream>

#include "support.hpp"

using namespace fmtest;

namespace {

EventType n(int i) { return ev("N" + std::to_string(i), "N" + std::to_string(i + 1), "m"); }

Execution nums(std::initializer_list<int> xs) {
  Execution e;
  for (int x : xs)
    e.push_back(n(x));
  return e;
}

const EventType a = ev("A", "B", "a");
const EventType b = ev("B", "C", "b");
const EventType c = ev("C", "D", "c");

} // namespace

TEST_CASE("order-preserving subsequence of an execution is valid") {
  std::vector<Execution> gt_execs{nums({0, 8, 12, 13, 15, 23, 24, 25})};
  auto gt = ground_truth_from_executions(gt_execs, 8);
  CHECK(is_valid(nums({0, 13, 15, 23}), gt));
  CHECK_FALSE(is_valid(nums({13, 0}), gt));
  CHECK(is_valid(gt_execs[0], gt));
  CHECK_FALSE(is_valid(nums({0, 99}), gt));
}

TEST_CASE("valid universe of a single execution") {
  std::vector<Execution> ex{{a, b, c}};
  auto gt = ground_truth_from_executions(ex, 8);
  CHECK(gt.valid_universe.at(2) == std::set<EventSeq>{{a, b}, {a, c}, {b, c}});
  CHECK(gt.valid_universe.at(3) == std::set<EventSeq>{{a, b, c}});
  CHECK(gt.valid_universe[4].empty());
}

TEST_CASE("length-one executions contribute nothing and shared prefixes count once") {
  std::vector<Execution> ex{{a}};
  auto gt = ground_truth_from_executions(ex, 4);
  for (int k = 2; k <= 4; ++k)
    CHECK(gt.valid_universe[k].empty());
  std::vector<Execution> shared{{a, b}, {a, b, c}};
  auto g2 = ground_truth_from_executions(shared, 4);
  CHECK(g2.valid_universe.at(2).size() == 3);
}

TEST_CASE("repeated events in an execution only yield unique-event patterns") {
  std::vector<Execution> ex{{a, b, a}};
  auto gt = ground_truth_from_executions(ex, 4);
  CHECK(gt.valid_universe.at(2) == std::set<EventSeq>{{a, b}, {b, a}});
  CHECK(gt.valid_universe[3].empty());
}

TEST_CASE("classification rows") {
  std::vector<Execution> ex{{a, b, c}};
  auto gt = ground_truth_from_executions(ex, 3);
  std::vector<Pattern> mined{{{a, b}, {1.0}}};
  auto r = classify(mined, gt, 3);
  CHECK(r.row(2).valid_found == 1);
  CHECK(r.row(2).invalid_found == 0);
  CHECK(r.row(2).valid_not_found == 2);

  auto empty = classify({}, gt, 3);
  CHECK(empty.row(2).valid_not_found == 3);
  CHECK(empty.row(3).valid_not_found == 1);
  CHECK(empty.total_valid_found() == 0);

  std::vector<Pattern> all2;
  for (const auto &s : gt.valid_universe.at(2))
    all2.push_back({s, {1.0}});
  all2.push_back({{c, a}, {1.0}});
  auto full = classify(all2, gt, 3);
  CHECK(full.row(2).valid_found == 3);
  CHECK(full.row(2).invalid_found == 1);
  CHECK(full.row(2).valid_not_found == 0);
}

TEST_CASE("validity agrees with the pairwise and exhaustive checks") {
  std::mt19937_64 g(5);
  std::uniform_int_distribution<int> ev_pick(0, 9);
  for (int trial = 0; trial < 200; ++trial) {
    // Executions with distinct events, for the pairwise form.
    std::vector<Execution> execs;
    for (int k = std::uniform_int_distribution<int>(1, 3)(g); k > 0; --k) {
      std::vector<int> pool{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
      std::shuffle(pool.begin(), pool.end(), g);
      pool.resize(std::uniform_int_distribution<std::size_t>(1, 8)(g));
      Execution e;
      for (int x : pool)
        e.push_back(n(x));
      execs.push_back(e);
    }
    auto gt = ground_truth_from_executions(execs, 8);
    for (int q = 0; q < 20; ++q) {
      std::vector<int> pool{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
      std::shuffle(pool.begin(), pool.end(), g);
      pool.resize(std::uniform_int_distribution<std::size_t>(2, 5)(g));
      EventSeq p;
      for (int x : pool)
        p.push_back(n(x));
      bool pairwise = false, exhaustive = false;
      for (const auto &e : execs) {
        pairwise = pairwise || oracle_pairwise_valid(p, e);
        exhaustive = exhaustive || oracle_valid_against(p, e);
      }
      CHECK(is_valid(p, gt) == pairwise);
      CHECK(is_valid(p, gt) == exhaustive);
      CHECK(is_valid(p, gt) == (gt.valid_universe[static_cast<int>(p.size())].count(p) == 1));
    }
  }
  // With repeated events only the exhaustive placement applies.
  for (int trial = 0; trial < 200; ++trial) {
    Execution e;
    for (int k = std::uniform_int_distribution<int>(2, 10)(g); k > 0; --k)
      e.push_back(n(ev_pick(g) % 5));
    std::vector<Execution> execs{e};
    auto gt = ground_truth_from_executions(execs, 5);
    std::vector<int> pool{0, 1, 2, 3, 4};
    std::shuffle(pool.begin(), pool.end(), g);
    pool.resize(std::uniform_int_distribution<std::size_t>(2, 4)(g));
    EventSeq p;
    for (int x : pool)
      p.push_back(n(x));
    CHECK(is_valid(p, gt) == oracle_valid_against(p, e));
  }
}

TEST_CASE("sub-selections of a valid pattern are valid") {
  auto gt = build_ground_truth(library_flows(), kDefaultMaxSteps, 8);
  for (const auto &[k, seqs] : gt.valid_universe) {
    if (k < 3)
      continue;
    for (const auto &s : seqs) {
      for (std::size_t drop = 0; drop < s.size(); ++drop) {
        EventSeq t = s;
        t.erase(t.begin() + static_cast<long>(drop));
        CHECK(is_valid(t, gt));
      }
    }
  }
}

TEST_CASE("accounting identities hold on random mined sets") {
  auto gt = build_ground_truth(library_flows(), kDefaultMaxSteps, 6);
  std::vector<EventType> events;
  for (const auto &e : gt.executions)
    events.insert(events.end(), e.begin(), e.end());
  std::sort(events.begin(), events.end());
  events.erase(std::unique(events.begin(), events.end()), events.end());

  std::mt19937_64 g(13);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Pattern> mined;
    for (int i = 0; i < 80; ++i) {
      auto pool = events;
      std::shuffle(pool.begin(), pool.end(), g);
      pool.resize(std::uniform_int_distribution<std::size_t>(2, 6)(g));
      mined.push_back({pool, {}});
    }
    // Mix in some genuinely valid ones.
    for (const auto &[k, seqs] : gt.valid_universe)
      if (!seqs.empty() && g() % 2)
        mined.push_back({*seqs.begin(), {}});
    mined = merge_patterns(mined);
    auto r = classify(mined, gt, 6);
    for (const auto &row : r.rows) {
      std::size_t found = 0;
      for (const auto &p : mined)
        found += p.length() == static_cast<std::size_t>(row.length);
      CHECK(row.valid_found + row.invalid_found == found);
      CHECK(row.valid_found + row.valid_not_found == gt.valid_universe[row.length].size());
    }
  }
}

TEST_CASE("library ground truth contains every execution at its own length") {
  auto gt = build_ground_truth(library_flows(), kDefaultMaxSteps, 8);
  for (const auto &e : gt.executions)
    CHECK(gt.valid_universe[static_cast<int>(e.size())].count(e) == 1);
  for (const auto &[k, seqs] : gt.valid_universe)
    for (const auto &s : seqs) {
      CHECK(s.size() == static_cast<std::size_t>(k));
      CHECK(std::set<EventType>(s.begin(), s.end()).size() == s.size());
    }
}

TEST_CASE("report writers") {
  std::vector<Execution> ex{{a, b, c}};
  auto gt = ground_truth_from_executions(ex, 3);
  std::vector<Pattern> mined{{{a, b}, {1.0}}, {{c, a}, {1.0}}};
  auto r = classify(mined, gt, 3);
  std::ostringstream csv;
  write_report_csv(r, csv);
  CHECK(csv.str() == "length,V_F,IV_F,V_NF\n2,1,1,2\n3,0,0,1\n");
  std::ostringstream table;
  write_report_table(r, table);
  CHECK(table.str().find("V&F") != std::string::npos);
  CHECK(table.str().find("IV&F") != std::string::npos);
}
