#pragma once

#include <optional>
#include <string>
#include <vector>

#include "flowmine/trace.hpp"

namespace flowmine {

enum class SliceMethod { None, Address, Causality, AddressThenCausality };

std::string to_string(SliceMethod m);
SliceMethod parse_slice_method(const std::string &s);

/// What address slicing does with events that carry no addr.
enum class AddrlessPolicy {
  Copy,     // copied into every address slice
  Residual, // collected into one extra, keyless slice
};

/// An order-preserving projection of a linearized trace.
struct SubTrace {
  std::vector<EventInstance> events;
  SliceMethod origin = SliceMethod::None;
  std::optional<Address> key;
  // True when causality slicing had to merge sub-traces to build this one.
  bool merged = false;

  Trace as_trace() const;
  std::vector<EventType> types() const;
};

std::vector<SubTrace> address_slice(const Trace &trace,
                                    AddrlessPolicy policy = AddrlessPolicy::Copy);

std::vector<SubTrace> causality_slice(const Trace &trace);
std::vector<SubTrace> causality_slice(const std::vector<EventInstance> &events);

std::vector<SubTrace> slice(const Trace &trace, SliceMethod method,
                            AddrlessPolicy policy = AddrlessPolicy::Copy);

} // namespace flowmine
