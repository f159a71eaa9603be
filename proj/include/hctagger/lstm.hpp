#pragma once

#include <vector>

#include "hctagger/tensor.hpp"

namespace hct {

// Single-direction LSTM with the standard cell (input/forget/output gates,
// tanh candidate). The input and recurrent weights are fused into one matrix
// multiplying the stacked [x; h_prev] vector. Gate rows are ordered
// [input, forget, candidate, output]; the forget-gate bias initializes to 1,
// everything else uniform in [-scale, scale].
template <typename T>
struct LstmDir {
  int in = 0;
  int hidden = 0;
  Tensor<T> w;  // (4h x (in + h))
  Tensor<T> b;  // (4h x 1)

  void resize(int input_dim, int hidden_dim) {
    in = input_dim;
    hidden = hidden_dim;
    w.resize(4 * hidden, in + hidden);
    b.resize(4 * hidden, 1);
  }

  void init(Rng& rng, T scale = static_cast<T>(0.1)) {
    w.init_uniform(rng, scale);
    b.v.setZero();
    b.v.block(hidden, 0, hidden, 1).setConstant(static_cast<T>(1));
  }

  void collect_params(const std::string& prefix, ParamList<T>& out) {
    out.push_back({prefix + ".w", &w});
    out.push_back({prefix + ".b", &b});
  }
};

// Cached activations of one forward pass over a (possibly padded) batch.
// Steps beyond a sequence's true length still run, but produce states that
// no consumer reads and that receive zero gradient.
template <typename T>
struct LstmCache {
  std::vector<Mat<T>> stacked;  // (in+h x B) input to the fused matmul, per step
  std::vector<Mat<T>> gates;    // (4h x B) post-activation gates, per step
  std::vector<Mat<T>> c;        // (h x B) cell state, per step
  std::vector<Mat<T>> tanh_c;   // (h x B)
  std::vector<Mat<T>> h;        // (h x B) hidden state, per step

  int steps() const { return static_cast<int>(h.size()); }

  void clear() {
    stacked.clear();
    gates.clear();
    c.clear();
    tanh_c.clear();
    h.clear();
  }
};

template <typename T>
inline void sigmoid_inplace(Eigen::Block<Mat<T>> block) {
  block = ((-block.array()).exp() + static_cast<T>(1)).inverse().matrix();
}

// Runs the layer over xs[0..T); xs[t] is (in x B). Hidden and cell states
// start at zero. Fills the cache and returns nothing; read states from it.
template <typename T>
void lstm_forward(const LstmDir<T>& dir, const std::vector<Mat<T>>& xs, LstmCache<T>& cache) {
  const int h = dir.hidden;
  const int steps = static_cast<int>(xs.size());
  const Eigen::Index batch = steps > 0 ? xs[0].cols() : 0;
  cache.clear();
  cache.stacked.reserve(steps);
  cache.gates.reserve(steps);
  cache.c.reserve(steps);
  cache.tanh_c.reserve(steps);
  cache.h.reserve(steps);

  Mat<T> h_prev = Mat<T>::Zero(h, batch);
  Mat<T> c_prev = Mat<T>::Zero(h, batch);
  for (int t = 0; t < steps; ++t) {
    Mat<T> stacked(dir.in + h, batch);
    stacked.topRows(dir.in) = xs[t];
    stacked.bottomRows(h) = h_prev;

    Mat<T> gates = (dir.w.v * stacked).colwise() + dir.b.v.col(0);
    sigmoid_inplace<T>(gates.block(0, 0, h, batch));            // input gate
    sigmoid_inplace<T>(gates.block(h, 0, h, batch));            // forget gate
    gates.block(2 * h, 0, h, batch) = gates.block(2 * h, 0, h, batch).array().tanh().matrix();
    sigmoid_inplace<T>(gates.block(3 * h, 0, h, batch));        // output gate

    Mat<T> c = gates.block(1 * h, 0, h, batch).cwiseProduct(c_prev) +
               gates.block(0, 0, h, batch).cwiseProduct(gates.block(2 * h, 0, h, batch));
    Mat<T> tanh_c = c.array().tanh().matrix();
    Mat<T> h_new = gates.block(3 * h, 0, h, batch).cwiseProduct(tanh_c);

    cache.stacked.push_back(std::move(stacked));
    cache.gates.push_back(std::move(gates));
    cache.c.push_back(std::move(c));
    cache.tanh_c.push_back(std::move(tanh_c));
    cache.h.push_back(std::move(h_new));
    h_prev = cache.h.back();
    c_prev = cache.c.back();
  }
}

// Backpropagation through time. dh_upstream[t] is the gradient flowing into
// h_t from consumers (zeroed by the caller at padded positions). Accumulates
// into dir.w.g / dir.b.g and, when dx is non-null, writes input gradients.
template <typename T>
void lstm_backward(LstmDir<T>& dir, const LstmCache<T>& cache,
                   const std::vector<Mat<T>>& dh_upstream, std::vector<Mat<T>>* dx) {
  const int h = dir.hidden;
  const int steps = cache.steps();
  if (steps == 0) return;
  const Eigen::Index batch = cache.h[0].cols();

  if (dx) dx->assign(steps, Mat<T>());
  Mat<T> dh_next = Mat<T>::Zero(h, batch);
  Mat<T> dc_next = Mat<T>::Zero(h, batch);
  Mat<T> d_gates(4 * h, batch);
  const Mat<T> c_start = Mat<T>::Zero(h, batch);

  for (int t = steps - 1; t >= 0; --t) {
    const auto gi = cache.gates[t].block(0, 0, h, batch);
    const auto gf = cache.gates[t].block(h, 0, h, batch);
    const auto gg = cache.gates[t].block(2 * h, 0, h, batch);
    const auto go = cache.gates[t].block(3 * h, 0, h, batch);

    Mat<T> dh = dh_upstream[t] + dh_next;
    Mat<T> dc = dc_next +
                dh.cwiseProduct(go).cwiseProduct(
                    (Mat<T>::Ones(h, batch) - cache.tanh_c[t].cwiseProduct(cache.tanh_c[t])));

    const Mat<T>& c_prev = t > 0 ? cache.c[t - 1] : c_start;

    // Pre-activation gate gradients.
    d_gates.block(0, 0, h, batch) =
        dc.cwiseProduct(gg).cwiseProduct(gi).cwiseProduct(Mat<T>::Ones(h, batch) - gi);
    d_gates.block(h, 0, h, batch) =
        dc.cwiseProduct(c_prev).cwiseProduct(gf).cwiseProduct(Mat<T>::Ones(h, batch) - gf);
    d_gates.block(2 * h, 0, h, batch) =
        dc.cwiseProduct(gi).cwiseProduct(Mat<T>::Ones(h, batch) - gg.cwiseProduct(gg));
    d_gates.block(3 * h, 0, h, batch) =
        dh.cwiseProduct(cache.tanh_c[t]).cwiseProduct(go).cwiseProduct(Mat<T>::Ones(h, batch) - go);

    dir.w.g.noalias() += d_gates * cache.stacked[t].transpose();
    dir.b.g.col(0) += d_gates.rowwise().sum();

    Mat<T> d_stacked = dir.w.v.transpose() * d_gates;
    if (dx) (*dx)[t] = d_stacked.topRows(dir.in);
    dh_next = d_stacked.bottomRows(h);
    dc_next = dc.cwiseProduct(gf);
  }
}

}  // namespace hct
