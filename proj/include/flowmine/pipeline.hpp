#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowmine/evaluator.hpp"
#include "flowmine/miner.hpp"
#include "flowmine/seq_model.hpp"
#include "flowmine/simulator.hpp"
#include "flowmine/slicer.hpp"

namespace flowmine {

inline constexpr const char *kToolVersion = "0.1.0";

enum class ModelKind { Count, Lstm };

std::string to_string(ModelKind k);
ModelKind parse_model_kind(const std::string &s);

struct PipelineConfig {
  std::vector<std::filesystem::path> flows;
  std::filesystem::path out = "out";
  std::uint64_t seed = 1;
  int traces = 1;
  // Initiators, instance count, delays and address pool. The per-trace seed
  // is derived from `seed`; sim.seed is ignored.
  SimConfig sim;
  SliceMethod slicing = SliceMethod::None;
  AddrlessPolicy addrless = AddrlessPolicy::Copy;
  ModelKind model = ModelKind::Count;
  LstmHyper hyper;
  MinerParams miner;
  int jobs = 1;
  std::size_t max_steps = kDefaultMaxSteps;

  /// Throws ConfigError naming the offending field.
  void check() const;
};

/// Reads a config document. Relative flow paths resolve against `base_dir`.
PipelineConfig config_from_json(const nlohmann::json &j, const std::filesystem::path &base_dir);
PipelineConfig load_config(const std::filesystem::path &path);
nlohmann::json config_to_json(const PipelineConfig &cfg);
/// FNV-1a over the canonical config document, as 16 hex digits.
std::string config_hash(const PipelineConfig &cfg);

std::vector<Flow> load_flows(const PipelineConfig &cfg);
/// Default initiators: one per flow, named after its start event's sender.
std::vector<Initiator> default_initiators(const std::vector<Flow> &flows);

// Output layout under cfg.out.
struct OutputLayout {
  std::filesystem::path root;
  std::filesystem::path traces() const { return root / "traces"; }
  std::filesystem::path slices() const { return root / "slices"; }
  std::filesystem::path slice_index() const { return slices() / "index.json"; }
  std::filesystem::path models() const { return root / "models"; }
  std::filesystem::path vocabulary() const { return models() / "vocabulary.json"; }
  std::filesystem::path model(int w) const {
    return models() / ("model_w" + std::to_string(w) + ".json");
  }
  std::filesystem::path initiating() const { return root / "initiating.json"; }
  std::filesystem::path patterns() const { return root / "patterns.jsonl"; }
  std::filesystem::path report_csv() const { return root / "report.csv"; }
  std::filesystem::path report_txt() const { return root / "report.txt"; }
  std::filesystem::path manifest() const { return root / "manifest.json"; }
};

/// Pipeline stages. Progress goes to `log`; each stage rewrites only its own
/// outputs and records itself in the manifest.
void cmd_simulate(const PipelineConfig &cfg, std::ostream &log);
void cmd_slice(const PipelineConfig &cfg, std::ostream &log);
void cmd_train(const PipelineConfig &cfg, std::ostream &log);
void cmd_mine(const PipelineConfig &cfg, std::ostream &log);
MiningReport cmd_eval(const PipelineConfig &cfg, std::ostream &log, std::ostream &table);
MiningReport cmd_run(const PipelineConfig &cfg, std::ostream &log, std::ostream &table);

// Loaders shared by the stages and the tests.
std::vector<Trace> load_traces(const std::filesystem::path &dir);
std::vector<std::vector<EventType>> load_subtraces(const OutputLayout &layout);

} // namespace flowmine
