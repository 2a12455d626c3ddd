#include "flowmine/flow.hpp"

#include <algorithm>
#include <fstream>

#include "flowmine/error.hpp"

namespace flowmine {

void to_json(nlohmann::json &j, const EventType &e) {
  j = nlohmann::json{{"src", e.src}, {"dest", e.dest}, {"cmd", e.cmd}};
}

void from_json(const nlohmann::json &j, EventType &e) {
  if (!j.is_object())
    throw InputError("event must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() != "src" && it.key() != "dest" && it.key() != "cmd")
      throw InputError("unknown event field '" + it.key() + "'");
  }
  e.src = j.at("src").get<std::string>();
  e.dest = j.at("dest").get<std::string>();
  e.cmd = j.at("cmd").get<std::string>();
}

const Transition &Flow::transition(const std::string &id) const {
  for (const auto &t : transitions)
    if (t.id == id)
      return t;
  throw InputError("flow '" + name + "' has no transition '" + id + "'");
}

const EventType &Flow::label(const Transition &t) const {
  auto it = labeling.find(t.id);
  if (it == labeling.end())
    throw FlowError(name, "unlabeled transition '" + t.id + "'");
  return it->second;
}

std::set<EventType> Flow::start_events() const {
  std::set<EventType> out;
  for (const auto &t : transitions)
    if (std::includes(initial_marking.begin(), initial_marking.end(),
                      t.preset.begin(), t.preset.end()))
      out.insert(label(t));
  return out;
}

namespace {

bool subset(const PlaceSet &a, const PlaceSet &b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

void check_known(const Flow &flow, const PlaceSet &places) {
  for (const auto &p : places)
    if (!flow.places.count(p))
      throw InputError("flow '" + flow.name + "': unknown place '" + p + "'");
}

// Candidate successors under the chaining rule: enabled in the marking and
// (after the first firing) consuming only from the previous postset.
std::vector<const Transition *> chained_candidates(const Flow &flow,
                                                   const Marking &m,
                                                   const Transition *prev) {
  std::vector<const Transition *> out;
  for (const auto *t : enabled(flow, m)) {
    if (prev == nullptr) {
      if (subset(flow.initial_marking, t->preset))
        out.push_back(t);
    } else if (subset(t->preset, prev->postset)) {
      out.push_back(t);
    }
  }
  return out;
}

struct Explorer {
  const Flow &flow;
  std::size_t max_steps;
  std::vector<FiringSequence> found;
  std::vector<std::string> warnings;
  FiringSequence path;
  std::vector<Marking> seen;

  void visit(const Marking &m, const Transition *prev) {
    if (prev != nullptr && subset(prev->postset, flow.end_marking))
      found.push_back(path);
    auto next = chained_candidates(flow, m, prev);
    if (next.empty() && (prev == nullptr || !subset(prev->postset, flow.end_marking)))
      warnings.push_back("dead end after firing sequence of length " +
                         std::to_string(path.size()));
    for (const auto *t : next) {
      if (path.size() + 1 > max_steps)
        throw FlowError(flow.name, "possibly unbounded flow (exceeded " +
                                       std::to_string(max_steps) + " steps)");
      PlaceSet overlap;
      std::set_intersection(m.places.begin(), m.places.end(), t->postset.begin(),
                            t->postset.end(), std::inserter(overlap, overlap.end()));
      for (const auto &p : t->preset)
        overlap.erase(p);
      if (!overlap.empty())
        warnings.push_back("transition '" + t->id + "' fires into marked place '" +
                           *overlap.begin() + "'");
      Marking after = fire(flow, m, *t);
      if (std::find(seen.begin(), seen.end(), after) != seen.end())
        continue;
      path.push_back(t->id);
      seen.push_back(after);
      visit(after, t);
      seen.pop_back();
      path.pop_back();
    }
  }

  void run() {
    Marking m0{flow.initial_marking};
    seen.push_back(m0);
    visit(m0, nullptr);
  }
};

} // namespace

std::vector<const Transition *> enabled(const Flow &flow, const Marking &marking) {
  check_known(flow, marking.places);
  std::vector<const Transition *> out;
  for (const auto &t : flow.transitions)
    if (subset(t.preset, marking.places))
      out.push_back(&t);
  return out;
}

Marking fire(const Flow &flow, const Marking &marking, const Transition &t) {
  check_known(flow, marking.places);
  if (!subset(t.preset, marking.places))
    throw PreconditionError("flow '" + flow.name + "': transition '" + t.id +
                            "' is not enabled");
  Marking out;
  std::set_difference(marking.places.begin(), marking.places.end(),
                      t.preset.begin(), t.preset.end(),
                      std::inserter(out.places, out.places.end()));
  out.places.insert(t.postset.begin(), t.postset.end());
  return out;
}

std::vector<FiringSequence> enumerate_firing_sequences(const Flow &flow,
                                                       std::size_t max_steps) {
  Explorer ex{flow, max_steps, {}, {}, {}, {}};
  ex.run();
  return ex.found;
}

std::vector<Execution> enumerate_executions(const Flow &flow, std::size_t max_steps) {
  std::set<Execution> uniq;
  for (const auto &seq : enumerate_firing_sequences(flow, max_steps)) {
    Execution e;
    for (const auto &id : seq)
      e.push_back(flow.label(flow.transition(id)));
    uniq.insert(std::move(e));
  }
  return {uniq.begin(), uniq.end()};
}

std::vector<Violation> validate_flow(const Flow &flow, std::size_t max_steps) {
  std::vector<Violation> out;
  auto error = [&](std::string msg) {
    out.push_back({Violation::Severity::Error, std::move(msg)});
  };
  auto warning = [&](std::string msg) {
    out.push_back({Violation::Severity::Warning, std::move(msg)});
  };

  if (flow.name.empty())
    error("flow has no name");
  if (flow.places.empty())
    error("flow has no places");
  if (flow.transitions.empty())
    error("flow has no transitions");
  if (flow.initial_marking.empty())
    error("empty initial marking");
  if (flow.end_marking.empty())
    error("empty end marking");
  if (!subset(flow.initial_marking, flow.places))
    error("initial marking references unknown places");
  if (!subset(flow.end_marking, flow.places))
    error("end marking references unknown places");

  std::set<std::string> ids;
  for (const auto &t : flow.transitions) {
    if (t.id.empty())
      error("transition with empty id");
    if (!ids.insert(t.id).second)
      error("duplicate transition id '" + t.id + "'");
    if (t.preset.empty())
      error("transition '" + t.id + "' has empty preset");
    if (t.postset.empty())
      error("transition '" + t.id + "' has empty postset");
    if (!subset(t.preset, flow.places) || !subset(t.postset, flow.places))
      error("transition '" + t.id + "' references unknown places");
    auto it = flow.labeling.find(t.id);
    if (it == flow.labeling.end()) {
      error("unlabeled transition '" + t.id + "'");
    } else if (it->second.src.empty() || it->second.dest.empty() ||
               it->second.cmd.empty()) {
      error("transition '" + t.id + "' has an empty event token");
    }
  }
  for (const auto &[id, _] : flow.labeling)
    if (!ids.count(id))
      error("label for unknown transition '" + id + "'");

  if (!out.empty())
    return out;

  Explorer ex{flow, max_steps, {}, {}, {}, {}};
  try {
    ex.run();
  } catch (const FlowError &e) {
    error(e.what());
    return out;
  }
  if (ex.found.empty())
    error("flow has no complete execution");

  std::set<std::string> uniq_warnings(ex.warnings.begin(), ex.warnings.end());
  for (const auto &w : uniq_warnings)
    warning(w);

  for (const auto &seq : ex.found) {
    bool consistent = true;
    for (std::size_t i = 1; i < seq.size(); ++i) {
      if (!causality_ok(flow.label(flow.transition(seq[i - 1])),
                        flow.label(flow.transition(seq[i]))))
        consistent = false;
    }
    if (!consistent) {
      warning("causality-inconsistent labeling");
      break;
    }
  }
  return out;
}

bool has_errors(const std::vector<Violation> &report) {
  return std::any_of(report.begin(), report.end(), [](const Violation &v) {
    return v.severity == Violation::Severity::Error;
  });
}

Flow flow_from_json(const nlohmann::json &j) {
  try {
    Flow f;
    f.name = j.at("name").get<std::string>();
    for (const auto &p : j.at("places"))
      f.places.insert(p.get<std::string>());
    for (const auto &jt : j.at("transitions")) {
      Transition t;
      t.id = jt.at("id").get<std::string>();
      for (const auto &p : jt.at("preset"))
        t.preset.insert(p.get<std::string>());
      for (const auto &p : jt.at("postset"))
        t.postset.insert(p.get<std::string>());
      if (jt.contains("event") && !jt.at("event").is_null())
        f.labeling[t.id] = jt.at("event").get<EventType>();
      f.transitions.push_back(std::move(t));
    }
    for (const auto &p : j.at("initial"))
      f.initial_marking.insert(p.get<std::string>());
    for (const auto &p : j.at("final"))
      f.end_marking.insert(p.get<std::string>());
    if (j.contains("addressed"))
      f.addressed = j.at("addressed").get<bool>();
    return f;
  } catch (const nlohmann::json::exception &e) {
    throw InputError(std::string("malformed flow definition: ") + e.what());
  }
}

nlohmann::json flow_to_json(const Flow &flow) {
  nlohmann::json j;
  j["name"] = flow.name;
  j["places"] = flow.places;
  auto &ts = j["transitions"] = nlohmann::json::array();
  for (const auto &t : flow.transitions) {
    nlohmann::json jt{{"id", t.id}, {"preset", t.preset}, {"postset", t.postset}};
    if (auto it = flow.labeling.find(t.id); it != flow.labeling.end())
      jt["event"] = it->second;
    ts.push_back(std::move(jt));
  }
  j["initial"] = flow.initial_marking;
  j["final"] = flow.end_marking;
  if (!flow.addressed)
    j["addressed"] = false;
  return j;
}

Flow load_flow(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw InputError("cannot open flow file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception &e) {
    throw InputError("flow file " + path.string() + ": " + e.what());
  }
  return flow_from_json(j);
}

} // namespace flowmine
