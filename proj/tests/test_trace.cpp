#include "doctest.h"

#include <sstream>

#include "flowmine/error.hpp"
#include "support.hpp"

using namespace fmtest;

namespace {

const EventType e1 = ev("A", "B", "e1");
const EventType e2 = ev("B", "C", "e2");
const EventType e3 = ev("C", "D", "e3");

// e1(10); e2(10),e1(15); e3(10),e2(15); e1(15), written out of canonical order.
const char *kEq1 =
    R"([{"src":"A","dest":"B","cmd":"e1","addr":10}])"
    "\n"
    R"([{"cmd":"e2","src":"B","dest":"C","addr":10}, {"src":"A","dest":"B","cmd":"e1","addr":15}])"
    "\n"
    R"([{"src":"C","dest":"D","cmd":"e3","addr":10},{"src":"B","dest":"C","cmd":"e2","addr":15}])"
    "\n"
    R"([{"src":"A","dest":"B","cmd":"e1","addr":15}])"
    "\n";

const char *kEq1Canonical =
    R"([{"src":"A","dest":"B","cmd":"e1","addr":10}])"
    "\n"
    R"([{"src":"A","dest":"B","cmd":"e1","addr":15},{"src":"B","dest":"C","cmd":"e2","addr":10}])"
    "\n"
    R"([{"src":"B","dest":"C","cmd":"e2","addr":15},{"src":"C","dest":"D","cmd":"e3","addr":10}])"
    "\n"
    R"([{"src":"A","dest":"B","cmd":"e1","addr":15}])"
    "\n";

Trace parse(const std::string &s) {
  std::istringstream in(s);
  return read_trace(in);
}

} // namespace

TEST_CASE("example trace file parses into four steps with addresses") {
  Trace t = parse(kEq1);
  REQUIRE(t.steps.size() == 4);
  CHECK(t.event_count() == 6);
  CHECK(t.steps[0] == TimeStep{{e1, 10}});
  CHECK(t.steps[1].size() == 2);
  CHECK(t.steps[3] == TimeStep{{e1, 15}});
}

TEST_CASE("writing a parsed trace gives the canonical file") {
  std::ostringstream out;
  write_trace(parse(kEq1), out);
  CHECK(out.str() == kEq1Canonical);
  std::ostringstream again;
  write_trace(parse(out.str()), again);
  CHECK(again.str() == kEq1Canonical);
}

TEST_CASE("events without addr round-trip") {
  std::ostringstream out;
  write_trace(singleton_trace({e1, e2}), out);
  CHECK(out.str() == "[{\"src\":\"A\",\"dest\":\"B\",\"cmd\":\"e1\"}]\n"
                     "[{\"src\":\"B\",\"dest\":\"C\",\"cmd\":\"e2\"}]\n");
  CHECK(parse(out.str()) == singleton_trace({e1, e2}));
}

TEST_CASE("malformed trace lines are rejected with a line number") {
  auto fails_at = [](const std::string &text, std::size_t line) {
    try {
      parse(text);
    } catch (const ParseError &e) {
      return e.line == line;
    }
    return false;
  };
  CHECK(fails_at("[]\n", 1));
  CHECK(fails_at("[{\"src\":\"A\",\"dest\":\"B\",\"cmd\":\"x\"}]\n{\"src\":1}\n", 2));
  CHECK(fails_at("[{\"src\":\"A\",\"dest\":\"B\"}]\n", 1));
  CHECK(fails_at("[{\"src\":\"A\",\"dest\":\"B\",\"cmd\":\"x\",\"addr\":-1}]\n", 1));
  CHECK(fails_at("[{\"src\":\"A\",\"dest\":\"B\",\"cmd\":\"x\",\"data\":3}]\n", 1));
  CHECK(fails_at("not json\n", 1));
  try {
    parse("[]\n");
  } catch (const ParseError &e) {
    CHECK(std::string(e.what()).find("empty timestep") != std::string::npos);
  }
}

TEST_CASE("linearize concatenates steps in canonical order") {
  CHECK(linearize(singleton_trace({e1, e2, e3})) == std::vector<EventType>{e1, e2, e3});
  CHECK(linearize(parse(kEq1)) == std::vector<EventType>{e1, e1, e2, e2, e3, e1});
  auto inst = linearize_instances(parse(kEq1));
  REQUIRE(inst.size() == 6);
  CHECK(inst[1] == EventInstance{e1, 15});
  CHECK(inst[2] == EventInstance{e2, 10});
}

TEST_CASE("canonical order does not depend on input order") {
  std::mt19937_64 g(3);
  TimeStep step{{e3, 1}, {e1, 4}, {e2, std::nullopt}, {e1, 2}, {e1, std::nullopt}};
  auto want = canonical_step(step);
  CHECK(std::is_sorted(want.begin(), want.end()));
  for (int i = 0; i < 20; ++i) {
    std::shuffle(step.begin(), step.end(), g);
    CHECK(canonical_step(step) == want);
  }
}

TEST_CASE("vocabulary is sorted, bijective and round-trips") {
  Trace t = parse(kEq1);
  Vocabulary v = build_vocabulary(std::span<const Trace>(&t, 1));
  REQUIRE(v.size() == 3);
  CHECK(v.events() == std::vector<EventType>{e1, e2, e3});
  for (int i = 0; i < 3; ++i)
    CHECK(v.encode(v.decode(i)) == i);
  CHECK_FALSE(v.find(ev("X", "Y", "z")));
  CHECK_THROWS_AS(v.encode(ev("X", "Y", "z")), InputError);
  CHECK(vocabulary_from_json(nlohmann::json::parse(vocabulary_to_json(v).dump())) == v);
}

TEST_CASE("library vocabulary covers every distinct flow label") {
  std::set<EventType> labels;
  std::vector<std::vector<EventType>> seqs;
  for (const auto &f : library_flows()) {
    for (const auto &[id, e] : f.labeling)
      labels.insert(e);
    for (const auto &x : enumerate_executions(f))
      seqs.push_back(x);
  }
  Vocabulary v = build_vocabulary(std::span<const std::vector<EventType>>(seqs));
  CHECK(v.size() == labels.size());
}

TEST_CASE("trace files round-trip through disk") {
  auto dir = std::filesystem::temp_directory_path() / "flowmine_trace_test";
  std::filesystem::create_directories(dir);
  Trace t = parse(kEq1);
  save_trace(t, dir / "t.jsonl");
  CHECK(load_trace(dir / "t.jsonl") == parse(kEq1Canonical));
  CHECK(read_file(dir / "t.jsonl") == kEq1Canonical);
  CHECK_THROWS_AS(load_trace(dir / "missing.jsonl"), InputError);
  std::filesystem::remove_all(dir);
}
