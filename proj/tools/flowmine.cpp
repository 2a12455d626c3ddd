// flowmine: simulate -> slice -> train -> mine -> eval.

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "flowmine/error.hpp"
#include "flowmine/pipeline.hpp"

using namespace flowmine;

namespace {

struct Overrides {
  std::string config;
  std::vector<std::string> flows;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> traces, instances, delay_min, delay_max;
  std::optional<std::uint64_t> addr_pool;
  std::optional<std::string> slicing, model, filters;
  std::optional<double> theta, theta_prime, lr;
  std::optional<int> max_len, hidden, epochs, jobs;
};

void add_flags(CLI::App &app, Overrides &o) {
  app.add_option("-c,--config", o.config, "pipeline config file (JSON)");
  app.add_option("--flows", o.flows, "flow definition files");
  app.add_option("--out", o.out, "output directory");
  app.add_option("--seed", o.seed, "global seed");
  app.add_option("--traces", o.traces, "number of simulated traces");
  app.add_option("--instances", o.instances, "flow instances per initiator");
  app.add_option("--delay-min", o.delay_min, "minimum start delay (cycles)");
  app.add_option("--delay-max", o.delay_max, "maximum start delay (cycles)");
  app.add_option("--addr-pool", o.addr_pool, "number of distinct addresses");
  app.add_option("--slicing", o.slicing, "none|address|causality|address+causality");
  app.add_option("--model", o.model, "lstm|count");
  app.add_option("--theta", o.theta, "pattern threshold");
  app.add_option("--theta-prime", o.theta_prime, "candidate threshold (<= theta)");
  app.add_option("--max-len", o.max_len, "maximum pattern length");
  app.add_option("--filters", o.filters, "comma list of causality,initiating (or none)");
  app.add_option("--hidden", o.hidden, "LSTM hidden width");
  app.add_option("--epochs", o.epochs, "LSTM epoch cap");
  app.add_option("--lr", o.lr, "LSTM learning rate");
  app.add_option("--jobs", o.jobs, "models trained concurrently");
}

PipelineConfig resolve(const Overrides &o) {
  PipelineConfig cfg = o.config.empty() ? PipelineConfig{} : load_config(o.config);
  if (!o.flows.empty()) {
    cfg.flows.clear();
    for (const auto &f : o.flows)
      cfg.flows.emplace_back(f);
  }
  if (o.out)
    cfg.out = *o.out;
  if (o.seed)
    cfg.seed = *o.seed;
  if (o.traces)
    cfg.traces = *o.traces;
  if (o.instances)
    cfg.sim.instances_per_initiator = *o.instances;
  if (o.delay_min)
    cfg.sim.delay_min = *o.delay_min;
  if (o.delay_max)
    cfg.sim.delay_max = *o.delay_max;
  if (o.addr_pool)
    cfg.sim.address_pool = *o.addr_pool;
  if (o.slicing)
    cfg.slicing = parse_slice_method(*o.slicing);
  if (o.model)
    cfg.model = parse_model_kind(*o.model);
  if (o.theta) {
    // theta' follows theta unless set separately.
    if (cfg.miner.theta_prime == cfg.miner.theta)
      cfg.miner.theta_prime = *o.theta;
    cfg.miner.theta = *o.theta;
  }
  if (o.theta_prime)
    cfg.miner.theta_prime = *o.theta_prime;
  if (o.max_len)
    cfg.miner.max_len = *o.max_len;
  if (o.filters) {
    cfg.miner.causality_filter = cfg.miner.initiating_filter = false;
    std::stringstream ss(*o.filters);
    std::string f;
    while (std::getline(ss, f, ',')) {
      if (f == "causality")
        cfg.miner.causality_filter = true;
      else if (f == "initiating")
        cfg.miner.initiating_filter = true;
      else if (f != "none" && !f.empty())
        throw ConfigError("--filters: unknown filter '" + f + "'");
    }
  }
  if (o.hidden)
    cfg.hyper.hidden = *o.hidden;
  if (o.epochs)
    cfg.hyper.epochs = *o.epochs;
  if (o.lr)
    cfg.hyper.lr = *o.lr;
  if (o.jobs)
    cfg.jobs = *o.jobs;
  cfg.check();
  return cfg;
}

void print_validation(const std::vector<std::string> &files) {
  for (const auto &f : files) {
    Flow flow = load_flow(f);
    auto report = validate_flow(flow);
    std::cout << flow.name << ": " << (report.empty() ? "ok" : "") << '\n';
    for (const auto &v : report)
      std::cout << "  " << (v.severity == Violation::Severity::Error ? "error: " : "warning: ")
                << v.message << '\n';
    if (!has_errors(report)) {
      for (const auto &ex : enumerate_executions(flow)) {
        std::cout << "  execution (" << ex.size() << "):";
        for (const auto &e : ex)
          std::cout << ' ' << e.str();
        std::cout << '\n';
      }
    }
    if (has_errors(report))
      throw DataError("flow '" + flow.name + "' failed validation");
  }
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Sequential message-flow pattern mining from concurrent traces"};
  app.require_subcommand(1);
  Overrides o;
  std::vector<std::string> validate_files;

  struct Sub {
    const char *name;
    const char *help;
  };
  const Sub subs[] = {{"simulate", "generate traces from the flow library"},
                      {"slice", "slice traces into sub-traces"},
                      {"train", "train one model per pattern length"},
                      {"mine", "extract patterns from the trained models"},
                      {"eval", "classify mined patterns against ground truth"},
                      {"run", "all stages end to end"}};
  std::vector<CLI::App *> cmds;
  for (const auto &s : subs) {
    auto *c = app.add_subcommand(s.name, s.help);
    add_flags(*c, o);
    cmds.push_back(c);
  }
  auto *validate = app.add_subcommand("validate", "check flow files and list their executions");
  validate->add_option("files", validate_files, "flow files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (validate->parsed()) {
      print_validation(validate_files);
      return 0;
    }
    const PipelineConfig cfg = resolve(o);
    if (cmds[0]->parsed())
      cmd_simulate(cfg, std::cerr);
    else if (cmds[1]->parsed())
      cmd_slice(cfg, std::cerr);
    else if (cmds[2]->parsed())
      cmd_train(cfg, std::cerr);
    else if (cmds[3]->parsed())
      cmd_mine(cfg, std::cerr);
    else if (cmds[4]->parsed())
      cmd_eval(cfg, std::cerr, std::cout);
    else if (cmds[5]->parsed())
      cmd_run(cfg, std::cerr, std::cout);
    return 0;
  } catch (const ConfigError &e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const DataError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
}
