#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "hctagger/rng.hpp"

namespace hct {

// Activations are stored feature-major: an (f x B) matrix holds one batch
// element per column.
template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

// A learnable tensor: value plus gradient accumulator of the same shape.
template <typename T>
struct Tensor {
  Mat<T> v;
  Mat<T> g;

  void resize(Eigen::Index rows, Eigen::Index cols) {
    v.setZero(rows, cols);
    g.setZero(rows, cols);
  }
  void zero_grad() { g.setZero(); }
  int64_t size() const { return static_cast<int64_t>(v.size()); }

  void init_uniform(Rng& rng, T scale) {
    for (Eigen::Index j = 0; j < v.cols(); ++j)
      for (Eigen::Index i = 0; i < v.rows(); ++i)
        v(i, j) = static_cast<T>(rng.uniform(-scale, scale));
  }
};

template <typename T>
struct ParamRef {
  std::string name;
  Tensor<T>* tensor;
};

template <typename T>
using ParamList = std::vector<ParamRef<T>>;

template <typename T>
int64_t parameter_count(const ParamList<T>& params) {
  int64_t n = 0;
  for (const auto& p : params) n += p.tensor->size();
  return n;
}

template <typename T>
void zero_grads(const ParamList<T>& params) {
  for (const auto& p : params) p.tensor->zero_grad();
}

// Global-norm gradient clipping; returns the pre-clip norm.
template <typename T>
double clip_gradients(const ParamList<T>& params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params) sq += p.tensor->g.template cast<double>().squaredNorm();
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const T scale = static_cast<T>(max_norm / norm);
    for (const auto& p : params) p.tensor->g *= scale;
  }
  return norm;
}

// Adam with bias correction (beta1 0.9, beta2 0.999, eps 1e-8).
template <typename T>
class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(const ParamList<T>& params) {
    if (m_.empty()) {
      for (const auto& p : params) {
        m_.push_back(Mat<T>::Zero(p.tensor->v.rows(), p.tensor->v.cols()));
        v_.push_back(Mat<T>::Zero(p.tensor->v.rows(), p.tensor->v.cols()));
      }
    }
    ++t_;
    const T bc1 = static_cast<T>(1.0 - std::pow(beta1_, t_));
    const T bc2 = static_cast<T>(1.0 - std::pow(beta2_, t_));
    const T b1 = static_cast<T>(beta1_), b2 = static_cast<T>(beta2_);
    for (size_t i = 0; i < params.size(); ++i) {
      auto& g = params[i].tensor->g;
      m_[i] = b1 * m_[i] + (1 - b1) * g;
      v_[i] = b2 * v_[i] + (1 - b2) * g.cwiseProduct(g);
      params[i].tensor->v.array() -=
          static_cast<T>(lr_) * (m_[i].array() / bc1) /
          ((v_[i].array() / bc2).sqrt() + static_cast<T>(eps_));
    }
  }

 private:
  double lr_, beta1_, beta2_, eps_;
  int64_t t_ = 0;
  std::vector<Mat<T>> m_, v_;
};

// Max-shifted log-sum-exp over selected indices; -inf for an empty subset.
template <typename T>
double log_sum_exp(const Vec<T>& x, const std::vector<int>& ids) {
  if (ids.empty()) return -std::numeric_limits<double>::infinity();
  double mx = -std::numeric_limits<double>::infinity();
  for (int id : ids) mx = std::max(mx, static_cast<double>(x[id]));
  double s = 0.0;
  for (int id : ids) s += std::exp(static_cast<double>(x[id]) - mx);
  return mx + std::log(s);
}

// In-place stable softmax of a vector.
template <typename T>
void softmax_inplace(Vec<T>& x) {
  const T mx = x.maxCoeff();
  x = (x.array() - mx).exp().matrix();
  x /= x.sum();
}

}  // namespace hct
