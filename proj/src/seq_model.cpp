#include "flowmine/seq_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "flowmine/error.hpp"
#include "flowmine/rng.hpp"

namespace flowmine {

std::vector<TrainingWindow> make_training_windows(std::span<const int> seq, int w) {
  if (w < 2)
    throw InputError("pattern length must be >= 2");
  std::vector<TrainingWindow> out;
  const auto W = static_cast<std::size_t>(w);
  if (seq.size() < W)
    return out;
  out.reserve(seq.size() - W + 1);
  for (std::size_t s = 0; s + W <= seq.size(); ++s)
    out.push_back({{seq.begin() + s, seq.begin() + s + W - 1}, seq[s + W - 1]});
  return out;
}

SequenceModel::SequenceModel(int w, std::size_t vocab_size) : w_(w), vocab_size_(vocab_size) {
  if (w < 2)
    throw InputError("pattern length must be >= 2");
  if (vocab_size == 0)
    throw InputError("empty vocabulary");
}

void SequenceModel::check_prefix(std::span<const int> prefix) const {
  if (prefix.size() != static_cast<std::size_t>(w_ - 1))
    throw InputError("prefix length " + std::to_string(prefix.size()) + " != " +
                     std::to_string(w_ - 1));
  for (int i : prefix)
    if (i < 0 || static_cast<std::size_t>(i) >= vocab_size_)
      throw InputError("prefix index out of vocabulary: " + std::to_string(i));
}

// ---------------------------------------------------------------- counts

CountModel::CountModel(int w, std::size_t vocab_size) : SequenceModel(w, vocab_size) {}

void CountModel::add(const TrainingWindow &win, std::uint64_t times) {
  check_prefix(win.prefix);
  if (win.label < 0 || static_cast<std::size_t>(win.label) >= vocab_size())
    throw InputError("window label out of vocabulary");
  auto &row = table_[win.prefix];
  row.labels[win.label] += times;
  row.total += times;
}

Distribution CountModel::predict_dist(std::span<const int> prefix) const {
  check_prefix(prefix);
  Distribution d;
  d.probs.assign(vocab_size(), 0.0);
  auto it = table_.find(std::vector<int>(prefix.begin(), prefix.end()));
  if (it == table_.end()) {
    std::fill(d.probs.begin(), d.probs.end(), 1.0 / static_cast<double>(vocab_size()));
    d.unseen = true;
    return d;
  }
  const double total = static_cast<double>(it->second.total);
  for (const auto &[label, c] : it->second.labels)
    d.probs[static_cast<std::size_t>(label)] = static_cast<double>(c) / total;
  return d;
}

std::uint64_t CountModel::count(std::span<const int> prefix, int label) const {
  auto it = table_.find(std::vector<int>(prefix.begin(), prefix.end()));
  if (it == table_.end())
    return 0;
  auto jt = it->second.labels.find(label);
  return jt == it->second.labels.end() ? 0 : jt->second;
}

std::uint64_t CountModel::total(std::span<const int> prefix) const {
  auto it = table_.find(std::vector<int>(prefix.begin(), prefix.end()));
  return it == table_.end() ? 0 : it->second.total;
}

nlohmann::json CountModel::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto &[prefix, row] : table_) {
    nlohmann::json labels = nlohmann::json::array();
    for (const auto &[l, c] : row.labels)
      labels.push_back({l, c});
    rows.push_back({{"prefix", prefix}, {"labels", labels}});
  }
  return {{"kind", "count"}, {"w", pattern_length()}, {"vocab_size", vocab_size()},
          {"table", rows}};
}

CountModel CountModel::from_json(const nlohmann::json &j) {
  CountModel m(j.at("w").get<int>(), j.at("vocab_size").get<std::size_t>());
  for (const auto &row : j.at("table")) {
    auto prefix = row.at("prefix").get<std::vector<int>>();
    for (const auto &lc : row.at("labels"))
      m.add({prefix, lc.at(0).get<int>()}, lc.at(1).get<std::uint64_t>());
  }
  return m;
}

CountModel fit_count_model(std::span<const TrainingWindow> windows, int w,
                           std::size_t vocab_size) {
  CountModel m(w, vocab_size);
  for (const auto &win : windows)
    m.add(win);
  return m;
}

// ---------------------------------------------------------------- LSTM

void LstmHyper::check() const {
  if (hidden < 1 || layers < 1 || batch < 1 || epochs < 0 || plateau_patience < 1)
    throw ConfigError("LSTM hidden/layers/batch/plateau_patience must be >= 1 and epochs >= 0");
  if (!(lr > 0) || momentum < 0 || momentum >= 1 || !(clip > 0))
    throw ConfigError("LSTM requires lr > 0, 0 <= momentum < 1, clip > 0");
}

void to_json(nlohmann::json &j, const LstmHyper &hp) {
  j = {{"hidden", hp.hidden}, {"layers", hp.layers},     {"batch", hp.batch},
       {"epochs", hp.epochs}, {"lr", hp.lr},             {"momentum", hp.momentum},
       {"clip", hp.clip},     {"plateau_tol", hp.plateau_tol}, {"plateau_patience", hp.plateau_patience},
       {"target_loss", hp.target_loss}};
}

void from_json(const nlohmann::json &j, LstmHyper &hp) {
  hp.hidden = j.value("hidden", hp.hidden);
  hp.layers = j.value("layers", hp.layers);
  hp.batch = j.value("batch", hp.batch);
  hp.epochs = j.value("epochs", hp.epochs);
  hp.lr = j.value("lr", hp.lr);
  hp.momentum = j.value("momentum", hp.momentum);
  hp.clip = j.value("clip", hp.clip);
  hp.plateau_tol = j.value("plateau_tol", hp.plateau_tol);
  hp.plateau_patience = j.value("plateau_patience", hp.plateau_patience);
  hp.target_loss = j.value("target_loss", hp.target_loss);
}

LstmLayout::LstmLayout(std::size_t vocab, std::size_t hidden, int nlayers)
    : vocab(vocab), hidden(hidden) {
  std::size_t off = 0;
  for (int l = 0; l < nlayers; ++l) {
    Layer ly;
    ly.in = l == 0 ? vocab : hidden;
    ly.w_off = off;
    off += 4 * hidden * ly.in;
    ly.u_off = off;
    off += 4 * hidden * hidden;
    ly.b_off = off;
    off += 4 * hidden;
    layers.push_back(ly);
  }
  wy_off = off;
  off += vocab * hidden;
  by_off = off;
  off += vocab;
  total = off;
}

LstmModel::LstmModel(int w, std::size_t vocab_size, LstmHyper hp, std::uint64_t seed)
    : SequenceModel(w, vocab_size), hp_(hp), seed_(seed),
      layout_(vocab_size, static_cast<std::size_t>(hp.hidden), hp.layers),
      params_(layout_.total, 0.0) {
  hp_.check();
  Rng rng(seed);
  const double k = 1.0 / std::sqrt(static_cast<double>(hp.hidden));
  for (auto &x : params_)
    x = (2.0 * rng.unit() - 1.0) * k;
  const std::size_t H = layout_.hidden;
  for (const auto &ly : layout_.layers)
    for (std::size_t r = 0; r < 4 * H; ++r)
      params_[ly.b_off + r] = (r >= H && r < 2 * H) ? 1.0 : 0.0;
  for (std::size_t v = 0; v < layout_.vocab; ++v)
    params_[layout_.by_off + v] = 0.0;
}

namespace {

nlohmann::json matrix_json(std::span<const double> p, std::size_t off, std::size_t rows,
                           std::size_t cols) {
  nlohmann::json m = nlohmann::json::array();
  for (std::size_t r = 0; r < rows; ++r)
    m.push_back(std::vector<double>(p.begin() + static_cast<long>(off + r * cols),
                                    p.begin() + static_cast<long>(off + (r + 1) * cols)));
  return m;
}

void read_matrix(const nlohmann::json &m, std::span<double> p, std::size_t off,
                 std::size_t rows, std::size_t cols) {
  if (m.size() != rows)
    throw InputError("model tensor has wrong row count");
  for (std::size_t r = 0; r < rows; ++r) {
    const auto row = m.at(r).get<std::vector<double>>();
    if (row.size() != cols)
      throw InputError("model tensor has wrong column count");
    std::copy(row.begin(), row.end(), p.begin() + static_cast<long>(off + r * cols));
  }
}

} // namespace

nlohmann::json LstmModel::to_json() const {
  const std::size_t H = layout_.hidden;
  nlohmann::json layers = nlohmann::json::array();
  for (const auto &ly : layout_.layers) {
    layers.push_back({{"W", matrix_json(params_, ly.w_off, 4 * H, ly.in)},
                      {"U", matrix_json(params_, ly.u_off, 4 * H, H)},
                      {"b", matrix_json(params_, ly.b_off, 1, 4 * H)[0]}});
  }
  return {{"kind", "lstm"},
          {"w", pattern_length()},
          {"vocab_size", vocab_size()},
          {"hyperparameters", hp_},
          {"seed", seed_},
          {"layers", layers},
          {"output",
           {{"W", matrix_json(params_, layout_.wy_off, layout_.vocab, H)},
            {"b", matrix_json(params_, layout_.by_off, 1, layout_.vocab)[0]}}},
          {"loss_history", loss_history}};
}

LstmModel LstmModel::from_json(const nlohmann::json &j) {
  LstmModel m(j.at("w").get<int>(), j.at("vocab_size").get<std::size_t>(),
              j.at("hyperparameters").get<LstmHyper>(), j.at("seed").get<std::uint64_t>());
  const std::size_t H = m.layout_.hidden;
  const auto &layers = j.at("layers");
  if (layers.size() != m.layout_.layers.size())
    throw InputError("model file layer count does not match hyperparameters");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto &ly = m.layout_.layers[l];
    read_matrix(layers[l].at("W"), m.params_, ly.w_off, 4 * H, ly.in);
    read_matrix(layers[l].at("U"), m.params_, ly.u_off, 4 * H, H);
    read_matrix(nlohmann::json::array({layers[l].at("b")}), m.params_, ly.b_off, 1, 4 * H);
  }
  read_matrix(j.at("output").at("W"), m.params_, m.layout_.wy_off, m.layout_.vocab, H);
  read_matrix(nlohmann::json::array({j.at("output").at("b")}), m.params_, m.layout_.by_off, 1,
              m.layout_.vocab);
  m.loss_history = j.value("loss_history", std::vector<double>{});
  return m;
}

LstmModel train_lstm(std::span<const TrainingWindow> windows, int w, std::size_t vocab_size,
                     const LstmHyper &hp, std::uint64_t seed, Exec exec) {
  if (windows.empty())
    throw TrainingError("no training windows for length " + std::to_string(w));
  LstmModel model(w, vocab_size, hp, seed);
  for (const auto &win : windows) {
    if (win.prefix.size() != static_cast<std::size_t>(w - 1))
      throw TrainingError("inconsistent window length");
  }

  const std::size_t n = windows.size();
  const std::size_t P = model.params().size();
  std::vector<double> velocity(P, 0.0);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(derive_seed(seed, 1));
  double lr = hp.lr;
  double best = INFINITY;
  int stale = 0;
  std::vector<TrainingWindow> batch;

  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(hp.batch)) {
      const std::size_t end = std::min(n, start + static_cast<std::size_t>(hp.batch));
      batch.clear();
      for (std::size_t i = start; i < end; ++i)
        batch.push_back(windows[order[i]]);
      auto lg = loss_and_gradients(model, batch, exec);
      double norm2 = 0.0;
      for (double g : lg.grads)
        norm2 += g * g;
      if (!std::isfinite(lg.loss) || !std::isfinite(norm2))
        throw TrainingError("training diverged at epoch " + std::to_string(epoch) +
                            " (w=" + std::to_string(w) + ", lr=" + std::to_string(lr) +
                            ", loss=" + std::to_string(lg.loss) + ")");
      const double norm = std::sqrt(norm2);
      const double scale = norm > hp.clip ? hp.clip / norm : 1.0;
      auto params = model.params();
      for (std::size_t k = 0; k < P; ++k) {
        velocity[k] = hp.momentum * velocity[k] - lr * scale * lg.grads[k];
        params[k] += velocity[k];
      }
      epoch_loss += lg.loss * static_cast<double>(end - start);
    }
    epoch_loss /= static_cast<double>(n);
    model.loss_history.push_back(epoch_loss);
    if (epoch_loss < hp.target_loss)
      break;
    if (epoch_loss < best * (1.0 - hp.plateau_tol)) {
      stale = 0;
    } else if (++stale >= hp.plateau_patience) {
      lr *= 0.5;
      stale = 0;
    }
    best = std::min(best, epoch_loss);
  }
  return model;
}

// ---------------------------------------------------------------- files

void save_model(const SequenceModel &model, const Vocabulary &vocab,
                const std::filesystem::path &path) {
  if (vocab.size() != model.vocab_size())
    throw InvariantError("model and vocabulary sizes differ");
  auto j = model.to_json();
  j["vocabulary"] = nlohmann::json::parse(vocabulary_to_json(vocab).dump());
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw DataError("cannot write model file " + path.string());
  out << j.dump() << '\n';
}

LoadedModel load_model(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw InputError("cannot open model file " + path.string());
  try {
    nlohmann::json j;
    in >> j;
    LoadedModel out;
    out.vocab = vocabulary_from_json(j.at("vocabulary"));
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "count")
      out.model = std::make_unique<CountModel>(CountModel::from_json(j));
    else if (kind == "lstm")
      out.model = std::make_unique<LstmModel>(LstmModel::from_json(j));
    else
      throw InputError("unknown model kind '" + kind + "'");
    if (out.model->vocab_size() != out.vocab.size())
      throw InputError("model vocabulary size mismatch");
    return out;
  } catch (const nlohmann::json::exception &e) {
    throw InputError("model file " + path.string() + ": " + e.what());
  }
}

} // namespace flowmine
