// Serial reference vs OpenMP kernels: LSTM batch gradient and the miner's
// per-prefix extension stage.
//
//   bench_kernels [hidden] [batch] [reps]

#include <chrono>
#include <cstdlib>
#include <iostream>

#include <omp.h>

#include "flowmine/miner.hpp"
#include "flowmine/rng.hpp"
#include "flowmine/seq_model.hpp"

using namespace flowmine;

namespace {

template <class F> double time_ms(int reps, F &&f) {
  auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i)
    f();
  auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

} // namespace

int main(int argc, char **argv) {
  const int hidden = argc > 1 ? std::atoi(argv[1]) : 64;
  const int batch = argc > 2 ? std::atoi(argv[2]) : 256;
  const int reps = argc > 3 ? std::atoi(argv[3]) : 5;
  const std::size_t V = 24;
  const int w = 6;

  std::cout << "threads " << omp_get_max_threads() << "\n";

  Rng rng(3);
  std::vector<TrainingWindow> windows;
  for (int i = 0; i < batch; ++i) {
    TrainingWindow win;
    for (int k = 0; k < w - 1; ++k)
      win.prefix.push_back(static_cast<int>(rng.below(V)));
    win.label = static_cast<int>(rng.below(V));
    windows.push_back(std::move(win));
  }
  LstmHyper hp;
  hp.hidden = hidden;
  LstmModel model(w, V, hp, 5);

  LossAndGradients a, b;
  const double ts = time_ms(reps, [&] { a = loss_and_gradients(model, windows, Exec::Serial); });
  const double tp = time_ms(reps, [&] { b = loss_and_gradients(model, windows, Exec::Parallel); });
  std::cout << "lstm batch gradient  H=" << hidden << " batch=" << batch << "  serial " << ts
            << " ms  parallel " << tp << " ms  speedup " << ts / tp
            << (a.grads == b.grads && a.loss == b.loss ? "  (bit-identical)" : "  (MISMATCH)")
            << "\n";

  // Mining stage over a suite of small LSTMs: the cost is dominated by
  // prefix queries, one per candidate.
  std::vector<std::string> comps{"A", "B", "C", "D", "E", "F"};
  std::vector<EventType> evs;
  for (std::size_t i = 0; i < V; ++i)
    evs.push_back({comps[i % comps.size()], comps[(i * 7 + 1) % comps.size()], "c" + std::to_string(i)});
  Vocabulary vocab(evs);
  std::vector<std::unique_ptr<LstmModel>> suite_models;
  ModelSuite suite;
  LstmHyper small;
  small.hidden = 16;
  for (int len = 2; len <= 4; ++len) {
    suite_models.push_back(std::make_unique<LstmModel>(len, V, small, 10 + len));
    suite[len] = suite_models.back().get();
  }
  MinerParams mp;
  mp.theta = 0.05;
  mp.theta_prime = 0.04;
  mp.max_len = 4;
  std::vector<Pattern> ps, pp;
  const double ms = time_ms(reps, [&] { ps = mine(suite, vocab, mp, std::nullopt, Exec::Serial); });
  const double mpar = time_ms(reps, [&] { pp = mine(suite, vocab, mp, std::nullopt, Exec::Parallel); });
  std::cout << "mine (lstm suite, W=4) patterns=" << ps.size() << "  serial " << ms
            << " ms  parallel " << mpar << " ms  speedup " << ms / mpar
            << (ps.size() == pp.size() ? "" : "  (MISMATCH)") << "\n";
  return 0;
}
