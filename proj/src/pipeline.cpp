#include "flowmine/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <set>

#include "flowmine/error.hpp"
#include "flowmine/rng.hpp"

namespace fs = std::filesystem;

namespace flowmine {

std::string to_string(ModelKind k) { return k == ModelKind::Count ? "count" : "lstm"; }

ModelKind parse_model_kind(const std::string &s) {
  if (s == "count")
    return ModelKind::Count;
  if (s == "lstm")
    return ModelKind::Lstm;
  throw ConfigError("model: unknown kind '" + s + "' (expected count or lstm)");
}

void PipelineConfig::check() const {
  if (flows.empty())
    throw ConfigError("flows: at least one flow file is required");
  if (traces < 1)
    throw ConfigError("simulation.traces: must be >= 1");
  if (sim.instances_per_initiator < 1)
    throw ConfigError("simulation.instances: must be >= 1");
  if (sim.delay_min < 1 || sim.delay_max < sim.delay_min)
    throw ConfigError("simulation.delay_min/delay_max: need 1 <= delay_min <= delay_max");
  if (sim.address_pool < 1)
    throw ConfigError("simulation.addr_pool: must be >= 1");
  if (!(miner.theta > 0.0 && miner.theta <= 1.0))
    throw ConfigError("miner.theta: must be in (0, 1]");
  if (!(miner.theta_prime > 0.0 && miner.theta_prime <= miner.theta))
    throw ConfigError("miner.theta_prime: must satisfy 0 < theta_prime <= theta");
  if (miner.max_len < 2 || miner.max_len > kMaxUniversePatternLength)
    throw ConfigError("miner.max_len: must be in [2, " +
                      std::to_string(kMaxUniversePatternLength) + "]");
  if (jobs < 1)
    throw ConfigError("jobs: must be >= 1");
  if (max_steps < 1)
    throw ConfigError("max_steps: must be >= 1");
  try {
    hyper.check();
  } catch (const ConfigError &e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
}

namespace {

void reject_unknown(const nlohmann::json &j, const std::string &where,
                    std::initializer_list<const char *> allowed) {
  if (!j.is_object())
    throw ConfigError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::none_of(allowed.begin(), allowed.end(),
                     [&](const char *a) { return it.key() == a; }))
      throw ConfigError(where + (where.empty() ? "" : ".") + it.key() + ": unknown field");
  }
}

template <class T> T field(const nlohmann::json &j, const char *key, const std::string &where, T def) {
  if (!j.contains(key))
    return def;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception &) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

} // namespace

PipelineConfig config_from_json(const nlohmann::json &j, const fs::path &base_dir) {
  PipelineConfig cfg;
  reject_unknown(j, "", {"flows", "out", "seed", "simulation", "slicing", "addrless", "model",
                         "miner", "jobs", "max_steps"});
  for (const auto &f : field<std::vector<std::string>>(j, "flows", "config", {})) {
    fs::path p(f);
    cfg.flows.push_back(p.is_absolute() ? p : base_dir / p);
  }
  cfg.out = field<std::string>(j, "out", "config", cfg.out.string());
  cfg.seed = field<std::uint64_t>(j, "seed", "config", cfg.seed);
  cfg.jobs = field<int>(j, "jobs", "config", cfg.jobs);
  cfg.max_steps = field<std::size_t>(j, "max_steps", "config", cfg.max_steps);
  cfg.slicing = parse_slice_method(field<std::string>(j, "slicing", "config", "none"));
  {
    auto a = field<std::string>(j, "addrless", "config", "copy");
    if (a == "copy")
      cfg.addrless = AddrlessPolicy::Copy;
    else if (a == "residual")
      cfg.addrless = AddrlessPolicy::Residual;
    else
      throw ConfigError("addrless: expected copy or residual");
  }

  if (j.contains("simulation")) {
    const auto &s = j.at("simulation");
    reject_unknown(s, "simulation",
                   {"traces", "instances", "delay_min", "delay_max", "addr_pool", "initiators"});
    cfg.traces = field<int>(s, "traces", "simulation", cfg.traces);
    cfg.sim.instances_per_initiator =
        field<int>(s, "instances", "simulation", cfg.sim.instances_per_initiator);
    cfg.sim.delay_min = field<int>(s, "delay_min", "simulation", cfg.sim.delay_min);
    cfg.sim.delay_max = field<int>(s, "delay_max", "simulation", cfg.sim.delay_max);
    cfg.sim.address_pool = field<std::uint64_t>(s, "addr_pool", "simulation", cfg.sim.address_pool);
    if (s.contains("initiators")) {
      for (const auto &ji : s.at("initiators")) {
        reject_unknown(ji, "simulation.initiators[]", {"component", "flows"});
        cfg.sim.initiators.push_back(
            {field<std::string>(ji, "component", "simulation.initiators[]", ""),
             field<std::vector<std::string>>(ji, "flows", "simulation.initiators[]", {})});
      }
    }
  }

  if (j.contains("model")) {
    const auto &m = j.at("model");
    reject_unknown(m, "model", {"kind", "hidden", "layers", "batch", "epochs", "lr", "momentum",
                                "clip", "plateau_tol", "plateau_patience", "target_loss"});
    cfg.model = parse_model_kind(field<std::string>(m, "kind", "model", "count"));
    try {
      cfg.hyper = m.get<LstmHyper>();
    } catch (const nlohmann::json::exception &) {
      throw ConfigError("model: wrong field type");
    }
  }

  if (j.contains("miner")) {
    const auto &m = j.at("miner");
    reject_unknown(m, "miner", {"theta", "theta_prime", "max_len", "filters", "initiating_mode"});
    cfg.miner.theta = field<double>(m, "theta", "miner", cfg.miner.theta);
    cfg.miner.theta_prime = field<double>(m, "theta_prime", "miner", cfg.miner.theta);
    cfg.miner.max_len = field<int>(m, "max_len", "miner", cfg.miner.max_len);
    for (const auto &f : field<std::vector<std::string>>(m, "filters", "miner", {})) {
      if (f == "causality")
        cfg.miner.causality_filter = true;
      else if (f == "initiating")
        cfg.miner.initiating_filter = true;
      else
        throw ConfigError("miner.filters: unknown filter '" + f + "'");
    }
    auto mode = field<std::string>(m, "initiating_mode", "miner", "seed");
    if (mode == "seed")
      cfg.miner.initiating_mode = InitiatingMode::Seed;
    else if (mode == "posthoc")
      cfg.miner.initiating_mode = InitiatingMode::PostHoc;
    else
      throw ConfigError("miner.initiating_mode: expected seed or posthoc");
  }
  return cfg;
}

PipelineConfig load_config(const fs::path &path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError("config file " + path.string() + ": " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

nlohmann::json config_to_json(const PipelineConfig &cfg) {
  nlohmann::json flows = nlohmann::json::array();
  for (const auto &f : cfg.flows)
    flows.push_back(f.lexically_normal().generic_string());
  nlohmann::json inits = nlohmann::json::array();
  for (const auto &i : cfg.sim.initiators)
    inits.push_back({{"component", i.component}, {"flows", i.flows}});
  std::vector<std::string> filters;
  if (cfg.miner.causality_filter)
    filters.push_back("causality");
  if (cfg.miner.initiating_filter)
    filters.push_back("initiating");
  nlohmann::json model = cfg.hyper;
  model["kind"] = to_string(cfg.model);
  return {
      {"flows", flows},
      {"out", cfg.out.generic_string()},
      {"seed", cfg.seed},
      {"simulation",
       {{"traces", cfg.traces},
        {"instances", cfg.sim.instances_per_initiator},
        {"delay_min", cfg.sim.delay_min},
        {"delay_max", cfg.sim.delay_max},
        {"addr_pool", cfg.sim.address_pool},
        {"initiators", inits}}},
      {"slicing", to_string(cfg.slicing)},
      {"addrless", cfg.addrless == AddrlessPolicy::Copy ? "copy" : "residual"},
      {"model", model},
      {"miner",
       {{"theta", cfg.miner.theta},
        {"theta_prime", cfg.miner.theta_prime},
        {"max_len", cfg.miner.max_len},
        {"filters", filters},
        {"initiating_mode",
         cfg.miner.initiating_mode == InitiatingMode::Seed ? "seed" : "posthoc"}}},
      {"jobs", cfg.jobs},
      {"max_steps", cfg.max_steps},
  };
}

std::string config_hash(const PipelineConfig &cfg) {
  auto j = config_to_json(cfg);
  // Neither changes any output file.
  j.erase("out");
  j.erase("jobs");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<Flow> load_flows(const PipelineConfig &cfg) {
  std::vector<Flow> flows;
  std::set<std::string> names;
  for (const auto &p : cfg.flows) {
    Flow f = load_flow(p);
    auto report = validate_flow(f, cfg.max_steps);
    for (const auto &v : report)
      if (v.severity == Violation::Severity::Error)
        throw FlowError(f.name, v.message + " (" + p.string() + ")");
    if (!names.insert(f.name).second)
      throw ConfigError("flows: duplicate flow name '" + f.name + "'");
    flows.push_back(std::move(f));
  }
  return flows;
}

std::vector<Initiator> default_initiators(const std::vector<Flow> &flows) {
  std::vector<Initiator> out;
  for (const auto &f : flows) {
    auto starts = f.start_events();
    out.push_back({starts.empty() ? f.name : starts.begin()->src, {f.name}});
  }
  return out;
}

namespace {

void ensure_dir(const fs::path &p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec)
    throw DataError("cannot create directory " + p.string() + ": " + ec.message());
}

template <class Json> void write_json(const fs::path &p, const Json &j) {
  std::ofstream out(p, std::ios::binary);
  if (!out)
    throw DataError("cannot write " + p.string());
  out << j.dump(2) << '\n';
}

nlohmann::json read_json(const fs::path &p) {
  std::ifstream in(p);
  if (!in)
    throw InputError("missing input " + p.string() + " (run the earlier stage first)");
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception &e) {
    throw InputError(p.string() + ": " + e.what());
  }
}

void record_stage(const PipelineConfig &cfg, const std::string &stage) {
  const OutputLayout out{cfg.out};
  const auto hash = config_hash(cfg);
  std::set<std::string> stages;
  if (fs::exists(out.manifest())) {
    try {
      auto old = read_json(out.manifest());
      if (old.value("config_hash", "") == hash)
        for (const auto &s : old.value("stages", std::vector<std::string>{}))
          stages.insert(s);
    } catch (const InputError &) {
    }
  }
  stages.insert(stage);
  write_json(out.manifest(), nlohmann::json{{"tool", "flowmine"},
                              {"version", kToolVersion},
                              {"config_hash", hash},
                              {"seed", cfg.seed},
                              {"stages", stages},
                              {"config", config_to_json(cfg)}});
}

std::string numbered(const std::string &stem, std::size_t i, int width) {
  std::string n = std::to_string(i);
  if (static_cast<int>(n.size()) < width)
    n.insert(0, static_cast<std::size_t>(width) - n.size(), '0');
  return stem + n;
}

void clear_dir(const fs::path &p) {
  std::error_code ec;
  fs::remove_all(p, ec);
  ensure_dir(p);
}

} // namespace

std::vector<Trace> load_traces(const fs::path &dir) {
  if (!fs::is_directory(dir))
    throw InputError("missing trace directory " + dir.string() + " (run simulate first)");
  std::vector<fs::path> files;
  for (const auto &e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (name.rfind("trace_", 0) == 0 && name.size() > 6 &&
        name.find(".prov.") == std::string::npos && e.path().extension() == ".jsonl")
      files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty())
    throw InputError("no trace files in " + dir.string());
  std::vector<Trace> out;
  for (const auto &f : files)
    out.push_back(load_trace(f));
  return out;
}

std::vector<std::vector<EventType>> load_subtraces(const OutputLayout &layout) {
  const auto index = read_json(layout.slice_index());
  std::vector<std::vector<EventType>> out;
  for (const auto &entry : index.at("slices"))
    out.push_back(linearize(load_trace(layout.slices() / entry.at("file").get<std::string>())));
  return out;
}

void cmd_simulate(const PipelineConfig &cfg, std::ostream &log) {
  cfg.check();
  const auto flows = load_flows(cfg);
  SimConfig sim = cfg.sim;
  if (sim.initiators.empty())
    sim.initiators = default_initiators(flows);
  const OutputLayout out{cfg.out};
  clear_dir(out.traces());
  for (int i = 0; i < cfg.traces; ++i) {
    sim.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(i));
    auto res = simulate(flows, sim);
    const auto stem = numbered("trace_", static_cast<std::size_t>(i), 3);
    save_trace(res.trace, out.traces() / (stem + ".jsonl"));
    std::ofstream prov(out.traces() / (stem + ".prov.jsonl"), std::ios::binary);
    write_provenance(res.provenance, prov);
    log << "simulate: " << stem << " steps=" << res.trace.steps.size()
        << " events=" << res.trace.event_count() << '\n';
  }
  record_stage(cfg, "simulate");
}

void cmd_slice(const PipelineConfig &cfg, std::ostream &log) {
  cfg.check();
  const OutputLayout out{cfg.out};
  const auto traces = load_traces(out.traces());
  clear_dir(out.slices());
  nlohmann::json entries = nlohmann::json::array();
  std::size_t total = 0;
  for (std::size_t t = 0; t < traces.size(); ++t) {
    const auto tdir = numbered("trace_", t, 3);
    ensure_dir(out.slices() / tdir);
    const auto subs = slice(traces[t], cfg.slicing, cfg.addrless);
    for (std::size_t s = 0; s < subs.size(); ++s) {
      const auto rel = tdir + "/" + numbered("sub_", s, 5) + ".jsonl";
      save_trace(subs[s].as_trace(), out.slices() / rel);
      nlohmann::json e{{"file", rel}, {"method", to_string(subs[s].origin)}, {"trace", t}};
      e["key"] = subs[s].key ? nlohmann::json(*subs[s].key) : nlohmann::json(nullptr);
      entries.push_back(std::move(e));
    }
    total += subs.size();
  }
  write_json(out.slice_index(), nlohmann::json{{"method", to_string(cfg.slicing)}, {"slices", entries}});
  log << "slice: method=" << to_string(cfg.slicing) << " traces=" << traces.size()
      << " sub-traces=" << total << '\n';
  record_stage(cfg, "slice");
}

void cmd_train(const PipelineConfig &cfg, std::ostream &log) {
  cfg.check();
  const OutputLayout out{cfg.out};
  const auto subs = load_subtraces(out);
  const Vocabulary vocab = build_vocabulary(std::span<const std::vector<EventType>>(subs));
  if (vocab.size() == 0)
    throw DataError("no events to train on");
  clear_dir(out.models());
  write_json(out.vocabulary(), vocabulary_to_json(vocab));

  std::vector<std::vector<int>> encoded;
  for (const auto &s : subs)
    encoded.push_back(vocab.encode(s));

  const int W = cfg.miner.max_len;
  std::mutex log_mu;
  std::exception_ptr failure;
  // Inner kernels run serially when lengths are trained concurrently.
  const Exec inner = cfg.jobs > 1 ? Exec::Serial : Exec::Parallel;
#pragma omp parallel for num_threads(cfg.jobs) schedule(dynamic)
  for (int w = 2; w <= W; ++w) {
    try {
      std::vector<TrainingWindow> windows;
      for (const auto &seq : encoded) {
        auto ws = make_training_windows(seq, w);
        windows.insert(windows.end(), std::make_move_iterator(ws.begin()),
                       std::make_move_iterator(ws.end()));
      }
      std::unique_ptr<SequenceModel> model;
      if (cfg.model == ModelKind::Count) {
        model = std::make_unique<CountModel>(fit_count_model(windows, w, vocab.size()));
      } else {
        if (windows.empty())
          throw TrainingError("no training windows for length " + std::to_string(w) +
                              " (sub-traces too short)");
        model = std::make_unique<LstmModel>(train_lstm(
            windows, w, vocab.size(), cfg.hyper,
            derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(w)), inner));
      }
      save_model(*model, vocab, out.model(w));
      std::lock_guard<std::mutex> lk(log_mu);
      log << "train: w=" << w << " kind=" << to_string(cfg.model)
          << " windows=" << windows.size() << '\n';
    } catch (...) {
      std::lock_guard<std::mutex> lk(log_mu);
      if (!failure)
        failure = std::current_exception();
    }
  }
  if (failure)
    std::rethrow_exception(failure);
  record_stage(cfg, "train");
}

void cmd_mine(const PipelineConfig &cfg, std::ostream &log) {
  cfg.check();
  const OutputLayout out{cfg.out};
  const Vocabulary vocab = vocabulary_from_json(read_json(out.vocabulary()));
  std::vector<LoadedModel> loaded;
  ModelSuite suite;
  for (int w = 2; w <= cfg.miner.max_len; ++w) {
    if (!fs::exists(out.model(w)))
      throw InputError("missing model for pattern length " + std::to_string(w) + " (" +
                       out.model(w).string() + ")");
    loaded.push_back(load_model(out.model(w)));
    if (!(loaded.back().vocab == vocab))
      throw InputError("model " + out.model(w).string() + " uses a different vocabulary");
  }
  for (auto &m : loaded)
    suite[m.model->pattern_length()] = m.model.get();

  const auto traces = load_traces(out.traces());
  const auto initiating = detect_initiating_events(traces);
  nlohmann::ordered_json init_json = nlohmann::ordered_json::array();
  for (const auto &e : initiating)
    init_json.push_back(event_json(e));
  write_json(out.initiating(), init_json);

  const auto patterns = mine(suite, vocab, cfg.miner, initiating);
  std::ofstream pf(out.patterns(), std::ios::binary);
  if (!pf)
    throw DataError("cannot write " + out.patterns().string());
  write_patterns(patterns, pf);
  log << "mine: patterns=" << patterns.size() << " initiating=" << initiating.size() << '\n';
  record_stage(cfg, "mine");
}

MiningReport cmd_eval(const PipelineConfig &cfg, std::ostream &log, std::ostream &table) {
  cfg.check();
  const OutputLayout out{cfg.out};
  const auto flows = load_flows(cfg);
  const auto gt = build_ground_truth(flows, cfg.max_steps, cfg.miner.max_len);
  std::ifstream pf(out.patterns());
  if (!pf)
    throw InputError("missing input " + out.patterns().string() + " (run mine first)");
  const auto patterns = read_patterns(pf);
  const auto report = classify(patterns, gt, cfg.miner.max_len);
  {
    std::ofstream csv(out.report_csv(), std::ios::binary);
    write_report_csv(report, csv);
    std::ofstream txt(out.report_txt(), std::ios::binary);
    write_report_table(report, txt);
  }
  write_report_table(report, table);
  log << "eval: executions=" << gt.executions.size() << " patterns=" << patterns.size()
      << " V&F=" << report.total_valid_found() << '\n';
  record_stage(cfg, "eval");
  return report;
}

MiningReport cmd_run(const PipelineConfig &cfg, std::ostream &log, std::ostream &table) {
  cfg.check();
  cmd_simulate(cfg, log);
  cmd_slice(cfg, log);
  cmd_train(cfg, log);
  cmd_mine(cfg, log);
  return cmd_eval(cfg, log, table);
}

} // namespace flowmine
