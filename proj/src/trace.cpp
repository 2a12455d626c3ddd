#include "flowmine/trace.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "flowmine/error.hpp"

namespace flowmine {

std::size_t Trace::event_count() const {
  std::size_t n = 0;
  for (const auto &s : steps)
    n += s.size();
  return n;
}

namespace {

EventInstance parse_event(const nlohmann::json &j, std::size_t line) {
  if (!j.is_object())
    throw ParseError(line, "event must be an object");
  EventInstance ev;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto &k = it.key();
    if (k == "src" || k == "dest" || k == "cmd") {
      if (!it->is_string() || it->get_ref<const std::string &>().empty())
        throw ParseError(line, "field '" + k + "' must be a non-empty string");
    } else if (k == "addr") {
      if (!it->is_number_unsigned())
        throw ParseError(line, "addr must be a non-negative integer");
      ev.addr = it->get<Address>();
    } else {
      throw ParseError(line, "unknown field '" + k + "'");
    }
  }
  if (!j.contains("src") || !j.contains("dest") || !j.contains("cmd"))
    throw ParseError(line, "event requires src, dest and cmd");
  ev.etype = {j.at("src").get<std::string>(), j.at("dest").get<std::string>(),
              j.at("cmd").get<std::string>()};
  return ev;
}

} // namespace

nlohmann::ordered_json event_json(const EventType &e, std::optional<Address> addr) {
  nlohmann::ordered_json j{{"src", e.src}, {"dest", e.dest}, {"cmd", e.cmd}};
  if (addr)
    j["addr"] = *addr;
  return j;
}

Trace read_trace(std::istream &in) {
  Trace t;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.empty() || text == "\r")
      continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception &) {
      throw ParseError(line, "malformed line");
    }
    if (!j.is_array())
      throw ParseError(line, "timestep must be an array");
    if (j.empty())
      throw ParseError(line, "empty timestep");
    TimeStep step;
    for (const auto &je : j)
      step.push_back(parse_event(je, line));
    t.steps.push_back(std::move(step));
  }
  return t;
}

void write_trace(const Trace &trace, std::ostream &out) {
  for (const auto &step : trace.steps) {
    nlohmann::ordered_json line = nlohmann::ordered_json::array();
    for (const auto &e : canonical_step(step))
      line.push_back(event_json(e.etype, e.addr));
    out << line.dump() << '\n';
  }
  if (!out)
    throw DataError("failed writing trace");
}

Trace load_trace(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw InputError("cannot open trace file " + path.string());
  try {
    return read_trace(in);
  } catch (const ParseError &e) {
    throw ParseError(e.line, path.string() + ": " + e.what());
  }
}

void save_trace(const Trace &trace, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw DataError("cannot write trace file " + path.string());
  write_trace(trace, out);
}

TimeStep canonical_step(const TimeStep &step) {
  TimeStep s = step;
  std::sort(s.begin(), s.end());
  return s;
}

std::vector<EventInstance> linearize_instances(const Trace &trace) {
  std::vector<EventInstance> out;
  out.reserve(trace.event_count());
  for (const auto &step : trace.steps)
    for (auto &e : canonical_step(step))
      out.push_back(std::move(e));
  return out;
}

std::vector<EventType> linearize(const Trace &trace) {
  std::vector<EventType> out;
  out.reserve(trace.event_count());
  for (const auto &e : linearize_instances(trace))
    out.push_back(e.etype);
  return out;
}

Vocabulary::Vocabulary(std::vector<EventType> events) : events_(std::move(events)) {
  for (std::size_t i = 0; i < events_.size(); ++i) {
    if (!index_.emplace(events_[i], static_cast<int>(i)).second)
      throw InputError("duplicate vocabulary entry " + events_[i].str());
  }
}

const EventType &Vocabulary::decode(int index) const {
  if (index < 0 || static_cast<std::size_t>(index) >= events_.size())
    throw InputError("vocabulary index out of range: " + std::to_string(index));
  return events_[index];
}

std::optional<int> Vocabulary::find(const EventType &e) const {
  auto it = index_.find(e);
  if (it == index_.end())
    return std::nullopt;
  return it->second;
}

int Vocabulary::encode(const EventType &e) const {
  auto idx = find(e);
  if (!idx)
    throw InputError("event not in vocabulary: " + e.str());
  return *idx;
}

std::vector<int> Vocabulary::encode(std::span<const EventType> seq) const {
  std::vector<int> out;
  out.reserve(seq.size());
  for (const auto &e : seq)
    out.push_back(encode(e));
  return out;
}

Vocabulary build_vocabulary(std::span<const Trace> traces) {
  std::set<EventType> uniq;
  for (const auto &t : traces)
    for (const auto &s : t.steps)
      for (const auto &e : s)
        uniq.insert(e.etype);
  return Vocabulary({uniq.begin(), uniq.end()});
}

Vocabulary build_vocabulary(std::span<const std::vector<EventType>> sequences) {
  std::set<EventType> uniq;
  for (const auto &s : sequences)
    uniq.insert(s.begin(), s.end());
  return Vocabulary({uniq.begin(), uniq.end()});
}

nlohmann::ordered_json vocabulary_to_json(const Vocabulary &v) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto &e : v.events())
    j.push_back(event_json(e));
  return j;
}

Vocabulary vocabulary_from_json(const nlohmann::json &j) {
  try {
    std::vector<EventType> events;
    for (const auto &e : j)
      events.push_back(e.get<EventType>());
    return Vocabulary(std::move(events));
  } catch (const nlohmann::json::exception &e) {
    throw InputError(std::string("malformed vocabulary: ") + e.what());
  }
}

} // namespace flowmine
