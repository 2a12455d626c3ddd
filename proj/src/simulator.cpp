#include "flowmine/simulator.hpp"

#include <algorithm>
#include <set>

#include "flowmine/error.hpp"
#include "flowmine/rng.hpp"

namespace flowmine {

void SimConfig::check() const {
  if (initiators.empty())
    throw ConfigError("simulation needs at least one initiator");
  for (const auto &i : initiators)
    if (i.flows.empty())
      throw ConfigError("initiator '" + i.component + "' has no flows");
  if (instances_per_initiator < 1)
    throw ConfigError("instances_per_initiator must be >= 1");
  if (delay_min < 1 || delay_max < delay_min)
    throw ConfigError("delay range must satisfy 1 <= delay_min <= delay_max");
  if (address_pool < 1)
    throw ConfigError("address_pool must be >= 1");
}

namespace {

// Branch structure of a flow's complete firing sequences. Each instance walks
// it from the root, choosing uniformly at every branch point; stopping at a
// complete sequence counts as one of the choices.
struct BranchTree {
  std::vector<FiringSequence> sequences;

  FiringSequence walk(Rng &rng) const {
    FiringSequence prefix;
    for (;;) {
      std::set<std::string> next;
      bool complete = false;
      for (const auto &s : sequences) {
        if (s.size() < prefix.size() || !std::equal(prefix.begin(), prefix.end(), s.begin()))
          continue;
        if (s.size() == prefix.size())
          complete = true;
        else
          next.insert(s[prefix.size()]);
      }
      std::vector<std::string> options(next.begin(), next.end());
      const std::size_t n = options.size() + (complete ? 1 : 0);
      if (n == 0)
        throw InvariantError("branch walk reached a dead end");
      const std::size_t pick = rng.below(n);
      if (pick == options.size())
        return prefix;
      prefix.push_back(options[pick]);
    }
  }
};

struct Instance {
  int id;
  const Flow *flow;
  std::optional<Address> addr;
  FiringSequence path;
  std::size_t pos = 0;
  Marking marking;
};

struct InitiatorState {
  std::vector<std::size_t> flows; // indices into the flow list
  int remaining;
  long next_start;
  std::optional<Instance> active;
};

} // namespace

SimResult simulate(const std::vector<Flow> &flows, const SimConfig &cfg) {
  if (flows.empty())
    throw ConfigError("simulation needs at least one flow");
  cfg.check();

  std::vector<BranchTree> trees;
  for (const auto &f : flows) {
    auto report = validate_flow(f);
    if (has_errors(report)) {
      for (const auto &v : report)
        if (v.severity == Violation::Severity::Error)
          throw FlowError(f.name, v.message);
    }
    trees.push_back({enumerate_firing_sequences(f)});
  }

  Rng rng(cfg.seed);
  auto draw_delay = [&] { return rng.between(cfg.delay_min, cfg.delay_max); };

  std::vector<InitiatorState> inits;
  for (const auto &i : cfg.initiators) {
    InitiatorState st;
    for (const auto &name : i.flows) {
      auto it = std::find_if(flows.begin(), flows.end(),
                             [&](const Flow &f) { return f.name == name; });
      if (it == flows.end())
        throw ConfigError("initiator '" + i.component + "' references unknown flow '" +
                          name + "'");
      st.flows.push_back(static_cast<std::size_t>(it - flows.begin()));
    }
    st.remaining = cfg.instances_per_initiator;
    st.next_start = draw_delay() - 1;
    inits.push_back(std::move(st));
  }

  SimResult out;
  int next_id = 0;
  struct Emitted {
    EventInstance ev;
    int instance;
    const std::string *flow;
  };

  for (long cycle = 0;; ++cycle) {
    bool live = false;
    std::vector<Emitted> emitted;
    for (auto &st : inits) {
      if (!st.active && st.remaining > 0 && cycle >= st.next_start) {
        const std::size_t fi = st.flows[rng.below(st.flows.size())];
        Instance inst{next_id++, &flows[fi], std::nullopt, {}, 0, {flows[fi].initial_marking}};
        if (flows[fi].addressed)
          inst.addr = rng.below(cfg.address_pool);
        inst.path = trees[fi].walk(rng);
        st.active = std::move(inst);
        --st.remaining;
      }
      if (st.active) {
        auto &inst = *st.active;
        const Transition &t = inst.flow->transition(inst.path[inst.pos++]);
        inst.marking = fire(*inst.flow, inst.marking, t);
        emitted.push_back({{inst.flow->label(t), inst.addr}, inst.id, &inst.flow->name});
        if (inst.pos == inst.path.size()) {
          st.active.reset();
          st.next_start = cycle + draw_delay();
        }
      }
      live = live || st.active || st.remaining > 0;
    }
    if (!emitted.empty()) {
      std::sort(emitted.begin(), emitted.end(), [](const Emitted &a, const Emitted &b) {
        return std::tie(a.ev, a.instance) < std::tie(b.ev, b.instance);
      });
      const std::size_t step = out.trace.steps.size();
      TimeStep ts;
      for (const auto &e : emitted) {
        ts.push_back(e.ev);
        out.provenance.push_back({step, e.ev, e.instance, *e.flow});
      }
      out.trace.steps.push_back(std::move(ts));
    }
    if (!live)
      break;
  }
  return out;
}

std::map<std::string, std::vector<Execution>> ground_truth(const std::vector<Flow> &flows,
                                                           std::size_t max_steps) {
  std::map<std::string, std::vector<Execution>> out;
  for (const auto &f : flows)
    out[f.name] = enumerate_executions(f, max_steps);
  return out;
}

void write_provenance(const std::vector<ProvenanceRecord> &prov, std::ostream &out) {
  for (const auto &r : prov) {
    nlohmann::ordered_json j{{"step", r.step},
                             {"event", event_json(r.event.etype, r.event.addr)},
                             {"instance", r.instance},
                             {"flow", r.flow}};
    out << j.dump() << '\n';
  }
}

std::vector<ProvenanceRecord> read_provenance(std::istream &in) {
  std::vector<ProvenanceRecord> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.empty())
      continue;
    try {
      auto j = nlohmann::json::parse(text);
      ProvenanceRecord r;
      r.step = j.at("step").get<std::size_t>();
      auto ev = j.at("event");
      if (ev.contains("addr")) {
        r.event.addr = ev.at("addr").get<Address>();
        ev.erase("addr");
      }
      r.event.etype = ev.get<EventType>();
      r.instance = j.at("instance").get<int>();
      r.flow = j.at("flow").get<std::string>();
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception &) {
      throw ParseError(line, "malformed provenance record");
    }
  }
  return out;
}

} // namespace flowmine
