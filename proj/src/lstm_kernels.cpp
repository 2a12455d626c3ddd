// Forward / backward passes of the stacked LSTM and the batch gradient
// kernel. The serial path is the reference; the OpenMP path computes
// per-window gradients concurrently and reduces them in window order so both
// paths agree bit for bit.

#include <algorithm>
#include <cmath>

#include "flowmine/error.hpp"
#include "flowmine/seq_model.hpp"

namespace flowmine {

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct StepCache {
  std::vector<double> i, f, g, o, c, tc, h;
  explicit StepCache(std::size_t H) : i(H), f(H), g(H), o(H), c(H), tc(H), h(H) {}
};

// Activations of every layer at every time step.
struct ForwardCache {
  std::vector<std::vector<StepCache>> steps; // [layer][t]
  std::vector<double> probs;
};

void forward(const LstmModel &m, std::span<const int> prefix, ForwardCache &fc) {
  const auto &L = m.layout();
  const auto p = m.params();
  const std::size_t H = L.hidden, T = prefix.size();
  const std::vector<double> zeros(H, 0.0);
  std::vector<double> z(4 * H);

  fc.steps.assign(L.layers.size(), {});
  for (std::size_t l = 0; l < L.layers.size(); ++l) {
    const auto &ly = L.layers[l];
    auto &cache = fc.steps[l];
    cache.reserve(T);
    for (std::size_t t = 0; t < T; ++t) {
      const std::vector<double> &h_prev = t ? cache[t - 1].h : zeros;
      const std::vector<double> &c_prev = t ? cache[t - 1].c : zeros;
      for (std::size_t r = 0; r < 4 * H; ++r) {
        double acc = p[ly.b_off + r];
        if (l == 0) {
          acc += p[ly.w_off + r * ly.in + static_cast<std::size_t>(prefix[t])];
        } else {
          const auto &x = fc.steps[l - 1][t].h;
          const double *wr = &p[ly.w_off + r * ly.in];
          for (std::size_t k = 0; k < ly.in; ++k)
            acc += wr[k] * x[k];
        }
        const double *ur = &p[ly.u_off + r * H];
        for (std::size_t k = 0; k < H; ++k)
          acc += ur[k] * h_prev[k];
        z[r] = acc;
      }
      StepCache s(H);
      for (std::size_t k = 0; k < H; ++k) {
        s.i[k] = sigmoid(z[k]);
        s.f[k] = sigmoid(z[H + k]);
        s.g[k] = std::tanh(z[2 * H + k]);
        s.o[k] = sigmoid(z[3 * H + k]);
        s.c[k] = s.f[k] * c_prev[k] + s.i[k] * s.g[k];
        s.tc[k] = std::tanh(s.c[k]);
        s.h[k] = s.o[k] * s.tc[k];
      }
      cache.push_back(std::move(s));
    }
  }

  const auto &top = fc.steps.back().back().h;
  const std::size_t V = L.vocab;
  fc.probs.assign(V, 0.0);
  double mx = -INFINITY;
  for (std::size_t v = 0; v < V; ++v) {
    double acc = p[L.by_off + v];
    const double *wr = &p[L.wy_off + v * H];
    for (std::size_t k = 0; k < H; ++k)
      acc += wr[k] * top[k];
    fc.probs[v] = acc;
    mx = std::max(mx, acc);
  }
  double sum = 0.0;
  for (auto &x : fc.probs) {
    x = std::exp(x - mx);
    sum += x;
  }
  for (auto &x : fc.probs)
    x /= sum;
}

double cross_entropy(const std::vector<double> &probs, int label) {
  return -std::log(std::max(probs[static_cast<std::size_t>(label)], 1e-300));
}

} // namespace

Distribution LstmModel::predict_dist(std::span<const int> prefix) const {
  check_prefix(prefix);
  ForwardCache fc;
  forward(*this, prefix, fc);
  return {std::move(fc.probs), false};
}

double window_loss(const LstmModel &model, const TrainingWindow &win) {
  ForwardCache fc;
  forward(model, win.prefix, fc);
  return cross_entropy(fc.probs, win.label);
}

double window_loss_grad(const LstmModel &model, const TrainingWindow &win,
                        std::span<double> grads) {
  const auto &L = model.layout();
  const auto p = model.params();
  const std::size_t H = L.hidden, V = L.vocab, T = win.prefix.size();
  const std::size_t NL = L.layers.size();

  ForwardCache fc;
  forward(model, win.prefix, fc);
  const double loss = cross_entropy(fc.probs, win.label);

  // Read-out layer.
  std::vector<double> dlogit = fc.probs;
  dlogit[static_cast<std::size_t>(win.label)] -= 1.0;
  const auto &top = fc.steps.back().back().h;
  // dh_in[t]: gradient reaching layer l's hidden state from above at step t.
  std::vector<std::vector<double>> dh_in(T, std::vector<double>(H, 0.0));
  for (std::size_t v = 0; v < V; ++v) {
    const double d = dlogit[v];
    grads[L.by_off + v] += d;
    double *gw = &grads[L.wy_off + v * H];
    const double *wr = &p[L.wy_off + v * H];
    for (std::size_t k = 0; k < H; ++k) {
      gw[k] += d * top[k];
      dh_in[T - 1][k] += d * wr[k];
    }
  }

  std::vector<double> dz(4 * H), dh(H), dc(H);
  for (std::size_t li = NL; li-- > 0;) {
    const auto &ly = L.layers[li];
    const auto &cache = fc.steps[li];
    std::vector<std::vector<double>> dh_below(li ? T : 0, std::vector<double>(ly.in, 0.0));
    std::vector<double> dh_next(H, 0.0), dc_next(H, 0.0);

    for (std::size_t t = T; t-- > 0;) {
      const auto &s = cache[t];
      for (std::size_t k = 0; k < H; ++k) {
        dh[k] = dh_in[t][k] + dh_next[k];
        dc[k] = dc_next[k] + dh[k] * s.o[k] * (1.0 - s.tc[k] * s.tc[k]);
        const double c_prev = t ? cache[t - 1].c[k] : 0.0;
        dz[k] = dc[k] * s.g[k] * s.i[k] * (1.0 - s.i[k]);
        dz[H + k] = dc[k] * c_prev * s.f[k] * (1.0 - s.f[k]);
        dz[2 * H + k] = dc[k] * s.i[k] * (1.0 - s.g[k] * s.g[k]);
        dz[3 * H + k] = dh[k] * s.tc[k] * s.o[k] * (1.0 - s.o[k]);
        dc_next[k] = dc[k] * s.f[k];
      }
      std::fill(dh_next.begin(), dh_next.end(), 0.0);
      const std::vector<double> *h_prev = t ? &cache[t - 1].h : nullptr;
      for (std::size_t r = 0; r < 4 * H; ++r) {
        const double d = dz[r];
        grads[ly.b_off + r] += d;
        if (li == 0) {
          grads[ly.w_off + r * ly.in + static_cast<std::size_t>(win.prefix[t])] += d;
        } else {
          const auto &x = fc.steps[li - 1][t].h;
          double *gw = &grads[ly.w_off + r * ly.in];
          const double *wr = &p[ly.w_off + r * ly.in];
          for (std::size_t k = 0; k < ly.in; ++k) {
            gw[k] += d * x[k];
            dh_below[t][k] += d * wr[k];
          }
        }
        const double *ur = &p[ly.u_off + r * H];
        double *gu = &grads[ly.u_off + r * H];
        for (std::size_t k = 0; k < H; ++k) {
          if (h_prev)
            gu[k] += d * (*h_prev)[k];
          dh_next[k] += d * ur[k];
        }
      }
    }
    if (li)
      dh_in = std::move(dh_below);
  }
  return loss;
}

LossAndGradients loss_and_gradients(const LstmModel &model,
                                    std::span<const TrainingWindow> batch, Exec exec) {
  if (batch.empty())
    throw TrainingError("loss_and_gradients: empty batch");
  const std::size_t P = model.params().size();
  const std::size_t n = batch.size();
  LossAndGradients out{0.0, std::vector<double>(P, 0.0)};

  if (exec == Exec::Serial) {
    std::vector<double> tmp(P);
    for (const auto &win : batch) {
      std::fill(tmp.begin(), tmp.end(), 0.0);
      out.loss += window_loss_grad(model, win, tmp);
      for (std::size_t k = 0; k < P; ++k)
        out.grads[k] += tmp[k];
    }
  } else {
    std::vector<double> per_window(n * P, 0.0);
    std::vector<double> losses(n, 0.0);
    const long nn = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < nn; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      losses[idx] = window_loss_grad(model, batch[idx],
                                     std::span<double>(per_window).subspan(idx * P, P));
    }
    const long pp = static_cast<long>(P);
#pragma omp parallel for schedule(static)
    for (long k = 0; k < pp; ++k) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        acc += per_window[i * P + static_cast<std::size_t>(k)];
      out.grads[static_cast<std::size_t>(k)] = acc;
    }
    for (double l : losses)
      out.loss += l;
  }

  const double inv = 1.0 / static_cast<double>(n);
  out.loss *= inv;
  for (auto &g : out.grads)
    g *= inv;
  return out;
}

} // namespace flowmine
