#pragma once

// Shared fixtures and independent reference implementations for the tests.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "flowmine/evaluator.hpp"
#include "flowmine/flow.hpp"
#include "flowmine/miner.hpp"
#include "flowmine/seq_model.hpp"
#include "flowmine/simulator.hpp"
#include "flowmine/slicer.hpp"
#include "flowmine/trace.hpp"

namespace fmtest {

using namespace flowmine;

inline EventType ev(const std::string &src, const std::string &dest, const std::string &cmd) {
  return {src, dest, cmd};
}

inline std::filesystem::path source_dir() { return FLOWMINE_SOURCE_DIR; }
inline std::filesystem::path flow_dir() { return source_dir() / "flows" / "v1"; }

inline Flow library_flow(const std::string &name) {
  return load_flow(flow_dir() / (name + ".json"));
}

inline std::vector<Flow> library_flows() {
  std::vector<Flow> out;
  for (const char *n : {"coherence", "cpu_read", "cpu_write", "periph_read", "periph_write"})
    out.push_back(library_flow(n));
  return out;
}

/// Linear flow p0 -t0-> p1 -t1-> ... over the given events.
inline Flow chain_flow(const std::string &name, const std::vector<EventType> &events) {
  Flow f;
  f.name = name;
  for (std::size_t i = 0; i <= events.size(); ++i)
    f.places.insert("p" + std::to_string(i));
  for (std::size_t i = 0; i < events.size(); ++i) {
    const std::string id = "t" + std::to_string(i);
    f.transitions.push_back({id, {"p" + std::to_string(i)}, {"p" + std::to_string(i + 1)}});
    f.labeling[id] = events[i];
  }
  f.initial_marking = {"p0"};
  f.end_marking = {"p" + std::to_string(events.size())};
  return f;
}

/// Trace with one event per step.
inline Trace singleton_trace(const std::vector<EventType> &events) {
  Trace t;
  for (const auto &e : events)
    t.steps.push_back({{e, std::nullopt}});
  return t;
}

// ------------------------------------------------------------------ flows

/// Naive recursive enumeration of Definition 2 firing sequences. No memo, no
/// visited set: only safe on acyclic flows. Depth-capped for robustness.
inline std::set<FiringSequence> oracle_firing_sequences(const Flow &flow, std::size_t cap = 32) {
  std::set<FiringSequence> out;
  FiringSequence path;
  std::function<void(const PlaceSet &, const Transition *)> rec = [&](const PlaceSet &m,
                                                                     const Transition *prev) {
    if (prev && std::includes(flow.end_marking.begin(), flow.end_marking.end(),
                              prev->postset.begin(), prev->postset.end()))
      out.insert(path);
    if (path.size() >= cap)
      return;
    for (const auto &t : flow.transitions) {
      if (!std::includes(m.begin(), m.end(), t.preset.begin(), t.preset.end()))
        continue;
      if (!prev && !std::includes(t.preset.begin(), t.preset.end(),
                                  flow.initial_marking.begin(), flow.initial_marking.end()))
        continue;
      if (prev && !std::includes(prev->postset.begin(), prev->postset.end(), t.preset.begin(),
                                 t.preset.end()))
        continue;
      PlaceSet next;
      for (const auto &p : m)
        if (!t.preset.count(p))
          next.insert(p);
      next.insert(t.postset.begin(), t.postset.end());
      path.push_back(t.id);
      rec(next, &t);
      path.pop_back();
    }
  };
  rec(flow.initial_marking, nullptr);
  return out;
}

// ------------------------------------------------------------- validity

/// Literal Definition 5 check: some injective, order-preserving placement of
/// the pattern's events into the execution. Exhaustive over position tuples.
inline bool oracle_valid_against(const std::vector<EventType> &p, const Execution &t) {
  std::function<bool(std::size_t, std::size_t)> place = [&](std::size_t i, std::size_t from) {
    if (i == p.size())
      return true;
    for (std::size_t j = from; j < t.size(); ++j)
      if (t[j] == p[i] && place(i + 1, j + 1))
        return true;
    return false;
  };
  return place(0, 0);
}

/// Pairwise form, for executions whose events are distinct: every pattern
/// event occurs in t and each ordered pair keeps its order.
inline bool oracle_pairwise_valid(const std::vector<EventType> &p, const Execution &t) {
  auto pos = [&](const EventType &e) -> std::optional<std::size_t> {
    auto it = std::find(t.begin(), t.end(), e);
    if (it == t.end())
      return std::nullopt;
    return static_cast<std::size_t>(it - t.begin());
  };
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!pos(p[i]))
      return false;
    for (std::size_t j = i + 1; j < p.size(); ++j)
      if (!(*pos(p[i]) < *pos(p[j])))
        return false;
  }
  return true;
}

// ---------------------------------------------------------------- mining

/// Count-model suite over index sequences, one model per length 2..W.
struct CountSuite {
  std::map<int, CountModel> models;
  ModelSuite suite;

  CountSuite(const std::vector<std::vector<int>> &seqs, int W, std::size_t V) {
    for (int w = 2; w <= W; ++w) {
      CountModel m(w, V);
      for (const auto &s : seqs)
        for (const auto &win : make_training_windows(s, w))
          m.add(win);
      models.emplace(w, std::move(m));
    }
    for (auto &[w, m] : models)
      suite[w] = &m;
  }
};

/// Empirical P(next | prefix) computed by scanning the corpus directly; nullopt
/// when the prefix is never followed by anything.
inline std::optional<double> corpus_conditional(const std::vector<std::vector<int>> &seqs,
                                                const std::vector<int> &prefix, int next) {
  std::uint64_t hit = 0, total = 0;
  const std::size_t k = prefix.size();
  for (const auto &s : seqs) {
    for (std::size_t i = 0; i + k < s.size(); ++i) {
      if (!std::equal(prefix.begin(), prefix.end(), s.begin() + static_cast<long>(i)))
        continue;
      ++total;
      if (s[i + k] == next)
        ++hit;
    }
  }
  if (total == 0)
    return std::nullopt;
  return static_cast<double>(hit) / static_cast<double>(total);
}

/// Exhaustive enumerator over every unique-event sequence of length 2..W.
inline std::set<std::vector<EventType>>
oracle_mine(const std::vector<std::vector<int>> &seqs, const Vocabulary &vocab, double theta,
            double theta_prime, int W, bool causality,
            const std::optional<std::set<EventType>> &initiating = std::nullopt) {
  std::set<std::vector<EventType>> out;
  const int V = static_cast<int>(vocab.size());
  std::vector<int> cur;
  std::function<void()> rec = [&]() {
    if (cur.size() >= 2) {
      // Score the latest extension; every earlier one was already checked.
      std::vector<int> prefix(cur.begin(), cur.end() - 1);
      auto p = corpus_conditional(seqs, prefix, cur.back());
      if (!p || *p < theta_prime)
        return;
      if (*p >= theta) {
        std::vector<EventType> seq;
        for (int i : cur)
          seq.push_back(vocab.decode(i));
        out.insert(seq);
      }
    }
    if (static_cast<int>(cur.size()) == W)
      return;
    for (int e = 0; e < V; ++e) {
      if (std::find(cur.begin(), cur.end(), e) != cur.end())
        continue;
      if (cur.empty() && initiating && !initiating->count(vocab.decode(e)))
        continue;
      if (!cur.empty() && causality && !(vocab.decode(cur.back()).dest == vocab.decode(e).src))
        continue;
      cur.push_back(e);
      rec();
      cur.pop_back();
    }
  };
  rec();
  return out;
}

inline std::set<std::vector<EventType>> pattern_set(const std::vector<Pattern> &ps) {
  std::set<std::vector<EventType>> out;
  for (const auto &p : ps)
    out.insert(p.events);
  return out;
}

/// Random corpus: a sparse random Markov chain over a random vocabulary with
/// a few shared endpoint names, so causality links exist.
struct RandomCorpus {
  Vocabulary vocab;
  std::vector<std::vector<int>> seqs;
};

inline RandomCorpus random_corpus(std::uint64_t seed, std::size_t max_vocab = 8,
                                  std::size_t max_events = 500) {
  std::mt19937_64 g(seed);
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(g);
  };
  const std::size_t V = pick(3, max_vocab);
  const char *comps[] = {"A", "B", "C", "D"};
  std::set<EventType> events;
  while (events.size() < V)
    events.insert(ev(comps[pick(0, 3)], comps[pick(0, 3)], "m" + std::to_string(pick(0, 2))));
  RandomCorpus c{Vocabulary({events.begin(), events.end()}), {}};

  // Each state keeps 1..3 successors with random weights.
  std::vector<std::vector<std::pair<int, double>>> next(V);
  for (std::size_t v = 0; v < V; ++v) {
    const std::size_t k = pick(1, std::min<std::size_t>(3, V));
    for (std::size_t i = 0; i < k; ++i)
      next[v].push_back({static_cast<int>(pick(0, V - 1)), 0.1 + std::uniform_real_distribution<>(0, 1)(g)});
  }
  std::size_t budget = pick(50, max_events);
  while (budget > 0) {
    std::size_t len = std::min(budget, pick(2, 40));
    budget -= len;
    std::vector<int> s{static_cast<int>(pick(0, V - 1))};
    while (s.size() < len) {
      const auto &opts = next[static_cast<std::size_t>(s.back())];
      std::vector<double> w;
      for (const auto &o : opts)
        w.push_back(o.second);
      std::discrete_distribution<std::size_t> d(w.begin(), w.end());
      s.push_back(opts[d(g)].first);
    }
    c.seqs.push_back(std::move(s));
  }
  return c;
}

// ------------------------------------------------------------------ misc

inline std::string read_file(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace fmtest
