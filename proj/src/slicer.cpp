#include "flowmine/slicer.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>

#include "flowmine/error.hpp"

namespace flowmine {

std::string to_string(SliceMethod m) {
  switch (m) {
  case SliceMethod::None:
    return "none";
  case SliceMethod::Address:
    return "address";
  case SliceMethod::Causality:
    return "causality";
  case SliceMethod::AddressThenCausality:
    return "address+causality";
  }
  return "?";
}

SliceMethod parse_slice_method(const std::string &s) {
  if (s == "none")
    return SliceMethod::None;
  if (s == "address")
    return SliceMethod::Address;
  if (s == "causality")
    return SliceMethod::Causality;
  if (s == "address+causality" || s == "address_then_causality")
    return SliceMethod::AddressThenCausality;
  throw ConfigError("unknown slicing method '" + s + "'");
}

Trace SubTrace::as_trace() const {
  Trace t;
  t.steps.reserve(events.size());
  for (const auto &e : events)
    t.steps.push_back({e});
  return t;
}

std::vector<EventType> SubTrace::types() const {
  std::vector<EventType> out;
  out.reserve(events.size());
  for (const auto &e : events)
    out.push_back(e.etype);
  return out;
}

std::vector<SubTrace> address_slice(const Trace &trace, AddrlessPolicy policy) {
  const auto events = linearize_instances(trace);
  std::set<Address> keys;
  bool has_addrless = false;
  for (const auto &e : events) {
    if (e.addr)
      keys.insert(*e.addr);
    else
      has_addrless = true;
  }

  std::vector<SubTrace> out;
  if (keys.empty()) {
    if (!events.empty())
      out.push_back({events, SliceMethod::Address, std::nullopt});
    return out;
  }

  std::map<Address, std::size_t> slot;
  for (auto k : keys) {
    slot[k] = out.size();
    out.push_back({{}, SliceMethod::Address, k});
  }
  std::optional<std::size_t> residual;
  if (has_addrless && policy == AddrlessPolicy::Residual) {
    residual = out.size();
    out.push_back({{}, SliceMethod::Address, std::nullopt});
  }
  for (const auto &e : events) {
    if (e.addr) {
      out[slot[*e.addr]].events.push_back(e);
    } else if (residual) {
      out[*residual].events.push_back(e);
    } else {
      for (std::size_t i = 0; i < keys.size(); ++i)
        out[i].events.push_back(e);
    }
  }
  return out;
}

std::vector<SubTrace> causality_slice(const std::vector<EventInstance> &events) {
  struct Open {
    std::vector<std::size_t> positions;
    bool alive = true;
    bool merged = false;
  };
  std::vector<Open> subs;
  // Open sub-traces keyed by the receiver of their last event.
  std::unordered_map<std::string, std::vector<std::size_t>> by_dest;

  for (std::size_t x = 0; x < events.size(); ++x) {
    const EventType &e = events[x].etype;
    std::size_t target;
    auto it = by_dest.find(e.src);
    if (it == by_dest.end() || it->second.empty()) {
      target = subs.size();
      subs.push_back({});
    } else {
      auto matches = std::move(it->second);
      by_dest.erase(it);
      std::sort(matches.begin(), matches.end());
      target = matches.front();
      if (matches.size() > 1) {
        std::vector<std::size_t> all;
        for (auto m : matches) {
          all.insert(all.end(), subs[m].positions.begin(), subs[m].positions.end());
          if (m != target) {
            subs[m].alive = false;
            subs[m].positions.clear();
          }
        }
        std::sort(all.begin(), all.end());
        subs[target].positions = std::move(all);
        subs[target].merged = true;
      }
    }
    subs[target].positions.push_back(x);
    by_dest[e.dest].push_back(target);
  }

  std::vector<SubTrace> out;
  for (const auto &s : subs) {
    if (!s.alive)
      continue;
    SubTrace st{{}, SliceMethod::Causality, std::nullopt, s.merged};
    for (auto p : s.positions)
      st.events.push_back(events[p]);
    out.push_back(std::move(st));
  }
  // Live sub-traces keep creation order, which is already first-event order
  // because a merge target is always the oldest member.
  return out;
}

std::vector<SubTrace> causality_slice(const Trace &trace) {
  return causality_slice(linearize_instances(trace));
}

std::vector<SubTrace> slice(const Trace &trace, SliceMethod method, AddrlessPolicy policy) {
  switch (method) {
  case SliceMethod::None: {
    std::vector<SubTrace> out;
    auto events = linearize_instances(trace);
    if (!events.empty())
      out.push_back({std::move(events), SliceMethod::None, std::nullopt});
    return out;
  }
  case SliceMethod::Address:
    return address_slice(trace, policy);
  case SliceMethod::Causality:
    return causality_slice(trace);
  case SliceMethod::AddressThenCausality: {
    std::vector<SubTrace> out;
    for (const auto &a : address_slice(trace, policy)) {
      for (auto &c : causality_slice(a.events)) {
        c.origin = SliceMethod::AddressThenCausality;
        c.key = a.key;
        out.push_back(std::move(c));
      }
    }
    return out;
  }
  }
  throw ConfigError("unknown slicing method");
}

} // namespace flowmine
