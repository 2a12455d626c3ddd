#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <vector>

#include <json.hpp>

#include "flowmine/trace.hpp"

namespace flowmine {

/// (S, e_w): the w-1 events before a position and the event at it.
struct TrainingWindow {
  std::vector<int> prefix;
  int label;

  bool operator==(const TrainingWindow &) const = default;
};

/// All k-w+1 sliding windows of `seq`; empty when seq is shorter than w.
std::vector<TrainingWindow> make_training_windows(std::span<const int> seq, int w);

struct Distribution {
  std::vector<double> probs;
  // Set when the model has no evidence for the prefix (count model only).
  bool unseen = false;
};

/// Next-event distribution for a fixed pattern length w: P(e | prefix of w-1).
class SequenceModel {
public:
  SequenceModel(int w, std::size_t vocab_size);
  virtual ~SequenceModel() = default;

  int pattern_length() const { return w_; }
  std::size_t vocab_size() const { return vocab_size_; }

  /// Throws InputError on a prefix of the wrong length or an unknown index.
  virtual Distribution predict_dist(std::span<const int> prefix) const = 0;
  virtual nlohmann::json to_json() const = 0;

protected:
  void check_prefix(std::span<const int> prefix) const;

private:
  int w_;
  std::size_t vocab_size_;
};

/// Exact empirical conditionals from window counts.
class CountModel : public SequenceModel {
public:
  CountModel(int w, std::size_t vocab_size);

  void add(const TrainingWindow &win, std::uint64_t times = 1);
  Distribution predict_dist(std::span<const int> prefix) const override;
  nlohmann::json to_json() const override;
  static CountModel from_json(const nlohmann::json &j);

  std::uint64_t count(std::span<const int> prefix, int label) const;
  std::uint64_t total(std::span<const int> prefix) const;
  std::size_t distinct_prefixes() const { return table_.size(); }

private:
  struct Row {
    std::map<int, std::uint64_t> labels;
    std::uint64_t total = 0;
  };
  std::map<std::vector<int>, Row> table_;
};

CountModel fit_count_model(std::span<const TrainingWindow> windows, int w,
                           std::size_t vocab_size);

struct LstmHyper {
  int hidden = 64;
  int layers = 2;
  int batch = 32;
  int epochs = 50;
  double lr = 0.05;
  double momentum = 0.9;
  double clip = 5.0;
  // Halve lr after `plateau_patience` consecutive epochs that fail to improve
  // the best epoch loss by this relative amount.
  double plateau_tol = 1e-4;
  int plateau_patience = 5;
  // Stop early once the epoch loss drops below this value.
  double target_loss = 1e-4;

  void check() const;
};

void to_json(nlohmann::json &j, const LstmHyper &hp);
void from_json(const nlohmann::json &j, LstmHyper &hp);

/// Offsets of every weight tensor inside the flat parameter vector.
/// Gate rows are ordered input, forget, cell candidate, output.
struct LstmLayout {
  struct Layer {
    std::size_t in;
    std::size_t w_off; // 4H x in
    std::size_t u_off; // 4H x H
    std::size_t b_off; // 4H
  };
  std::size_t vocab;
  std::size_t hidden;
  std::vector<Layer> layers;
  std::size_t wy_off; // V x H
  std::size_t by_off; // V
  std::size_t total;

  LstmLayout(std::size_t vocab, std::size_t hidden, int layers);
};

/// Stacked LSTM over one-hot inputs with a softmax read-out of the last
/// top-layer hidden state.
class LstmModel : public SequenceModel {
public:
  /// Randomly initialized weights, deterministic in `seed`.
  LstmModel(int w, std::size_t vocab_size, LstmHyper hp, std::uint64_t seed);

  Distribution predict_dist(std::span<const int> prefix) const override;
  nlohmann::json to_json() const override;
  static LstmModel from_json(const nlohmann::json &j);

  const LstmLayout &layout() const { return layout_; }
  const LstmHyper &hyper() const { return hp_; }
  std::uint64_t seed() const { return seed_; }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  std::vector<double> loss_history;

private:
  LstmHyper hp_;
  std::uint64_t seed_;
  LstmLayout layout_;
  std::vector<double> params_;
};

enum class Exec { Serial, Parallel };

struct LossAndGradients {
  double loss;               // mean cross-entropy over the batch
  std::vector<double> grads; // same layout as LstmModel::params()
};

/// Mean categorical cross-entropy and its gradient over a batch.
/// Serial and Parallel produce bit-identical results.
LossAndGradients loss_and_gradients(const LstmModel &model,
                                    std::span<const TrainingWindow> batch,
                                    Exec exec = Exec::Parallel);

/// Single-window kernels. The gradient is accumulated into `grads`.
double window_loss_grad(const LstmModel &model, const TrainingWindow &win,
                        std::span<double> grads);
double window_loss(const LstmModel &model, const TrainingWindow &win);

/// Minibatch SGD with momentum, gradient-norm clipping and lr halving on
/// plateau. Throws TrainingError on an empty window set or a non-finite loss.
LstmModel train_lstm(std::span<const TrainingWindow> windows, int w, std::size_t vocab_size,
                     const LstmHyper &hp, std::uint64_t seed,
                     Exec exec = Exec::Parallel);

void save_model(const SequenceModel &model, const Vocabulary &vocab,
                const std::filesystem::path &path);

struct LoadedModel {
  std::unique_ptr<SequenceModel> model;
  Vocabulary vocab;
};
LoadedModel load_model(const std::filesystem::path &path);

} // namespace flowmine
