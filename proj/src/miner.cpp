#include "flowmine/miner.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "flowmine/error.hpp"

namespace flowmine {

void MinerParams::check() const {
  if (!(theta > 0.0 && theta <= 1.0))
    throw ConfigError("theta must be in (0, 1]");
  if (!(theta_prime > 0.0 && theta_prime <= theta))
    throw ConfigError("theta_prime must satisfy 0 < theta_prime <= theta");
  if (max_len < 2)
    throw ConfigError("max_len must be >= 2");
}

std::set<EventType> detect_initiating_events(std::span<const Trace> traces) {
  std::set<EventType> seen, disqualified;
  for (const auto &trace : traces) {
    std::unordered_set<std::string> earlier_dests;
    for (const auto &step : trace.steps) {
      for (const auto &e : step) {
        seen.insert(e.etype);
        if (earlier_dests.count(e.etype.src))
          disqualified.insert(e.etype);
      }
      for (const auto &e : step)
        earlier_dests.insert(e.etype.dest);
    }
  }
  std::set<EventType> out;
  std::set_difference(seen.begin(), seen.end(), disqualified.begin(), disqualified.end(),
                      std::inserter(out, out.end()));
  return out;
}

namespace {

struct Candidate {
  std::vector<int> seq;
  std::vector<double> probs;
};

struct Extension {
  std::vector<Candidate> next;
  std::vector<Candidate> emitted;
};

Extension extend(const SequenceModel &model, const Vocabulary &vocab, const MinerParams &params,
                 const Candidate &c) {
  Extension out;
  const Distribution d = model.predict_dist(c.seq);
  if (d.unseen)
    return out;
  const EventType &last = vocab.decode(c.seq.back());
  for (std::size_t e = 0; e < d.probs.size(); ++e) {
    const int ei = static_cast<int>(e);
    if (std::find(c.seq.begin(), c.seq.end(), ei) != c.seq.end())
      continue;
    if (params.causality_filter && !causality_ok(last, vocab.decode(ei)))
      continue;
    const double p = d.probs[e];
    if (!(p >= params.theta_prime))
      continue;
    Candidate ext{c.seq, c.probs};
    ext.seq.push_back(ei);
    ext.probs.push_back(p);
    if (p >= params.theta)
      out.emitted.push_back(ext);
    out.next.push_back(std::move(ext));
  }
  return out;
}

} // namespace

std::vector<Pattern> mine(const ModelSuite &models, const Vocabulary &vocab,
                          const MinerParams &params,
                          const std::optional<std::set<EventType>> &initiating, Exec exec) {
  params.check();
  if (params.initiating_filter && !initiating)
    throw ConfigError("initiating filter requested without initiating events");
  for (int w = 2; w <= params.max_len; ++w) {
    auto it = models.find(w);
    if (it == models.end() || it->second == nullptr)
      throw InputError("missing model for pattern length " + std::to_string(w));
    if (it->second->vocab_size() != vocab.size())
      throw InputError("model for length " + std::to_string(w) +
                       " does not match the vocabulary");
  }

  const bool seed_filter = params.initiating_filter && params.initiating_mode == InitiatingMode::Seed;
  std::vector<Candidate> candidates;
  for (std::size_t v = 0; v < vocab.size(); ++v) {
    if (seed_filter && !initiating->count(vocab.decode(static_cast<int>(v))))
      continue;
    candidates.push_back({{static_cast<int>(v)}, {}});
  }

  std::vector<Pattern> out;
  for (int w = 2; w <= params.max_len && !candidates.empty(); ++w) {
    const SequenceModel &model = *models.at(w);
    std::vector<Extension> results(candidates.size());
    if (exec == Exec::Parallel) {
      const long n = static_cast<long>(candidates.size());
#pragma omp parallel for schedule(dynamic, 8)
      for (long i = 0; i < n; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        results[idx] = extend(model, vocab, params, candidates[idx]);
      }
    } else {
      for (std::size_t i = 0; i < candidates.size(); ++i)
        results[i] = extend(model, vocab, params, candidates[i]);
    }
    std::vector<Candidate> next;
    for (auto &r : results) {
      for (auto &c : r.emitted) {
        Pattern p;
        for (int i : c.seq)
          p.events.push_back(vocab.decode(i));
        p.step_probs = std::move(c.probs);
        out.push_back(std::move(p));
      }
      for (auto &c : r.next)
        next.push_back(std::move(c));
    }
    candidates = std::move(next);
  }

  if (params.initiating_filter && params.initiating_mode == InitiatingMode::PostHoc) {
    std::erase_if(out, [&](const Pattern &p) { return !initiating->count(p.events.front()); });
  }
  return merge_patterns(std::move(out));
}

std::vector<Pattern> merge_patterns(std::vector<Pattern> patterns) {
  std::sort(patterns.begin(), patterns.end(), [](const Pattern &a, const Pattern &b) {
    if (a.events != b.events)
      return a.events < b.events;
    return a.step_probs > b.step_probs;
  });
  patterns.erase(std::unique(patterns.begin(), patterns.end(),
                             [](const Pattern &a, const Pattern &b) { return a.events == b.events; }),
                 patterns.end());
  return patterns;
}

nlohmann::ordered_json pattern_to_json(const Pattern &p) {
  nlohmann::ordered_json events = nlohmann::ordered_json::array();
  for (const auto &e : p.events)
    events.push_back(event_json(e));
  return {{"events", events}, {"step_probs", p.step_probs}, {"length", p.length()}};
}

Pattern pattern_from_json(const nlohmann::json &j) {
  Pattern p;
  p.events = j.at("events").get<std::vector<EventType>>();
  p.step_probs = j.at("step_probs").get<std::vector<double>>();
  if (j.contains("length") && j.at("length").get<std::size_t>() != p.events.size())
    throw InputError("pattern length field disagrees with its events");
  return p;
}

void write_patterns(const std::vector<Pattern> &patterns, std::ostream &out) {
  for (const auto &p : patterns)
    out << pattern_to_json(p).dump() << '\n';
}

std::vector<Pattern> read_patterns(std::istream &in) {
  std::vector<Pattern> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.empty())
      continue;
    try {
      out.push_back(pattern_from_json(nlohmann::json::parse(text)));
    } catch (const nlohmann::json::exception &) {
      throw ParseError(line, "malformed pattern record");
    } catch (const InputError &e) {
      throw ParseError(line, e.what());
    }
  }
  return out;
}

} // namespace flowmine
