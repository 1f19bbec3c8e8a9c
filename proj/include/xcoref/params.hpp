#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace xcoref {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// A trainable tensor with its gradient accumulator and Adam moments.
template <typename Scalar>
struct Param {
  Matrix<Scalar> value;
  Matrix<Scalar> grad;
  Matrix<Scalar> m;
  Matrix<Scalar> v;

  Param() = default;
  Param(Eigen::Index rows, Eigen::Index cols) { resize(rows, cols); }

  void resize(Eigen::Index rows, Eigen::Index cols) {
    value = Matrix<Scalar>::Zero(rows, cols);
    grad = Matrix<Scalar>::Zero(rows, cols);
    m = Matrix<Scalar>::Zero(rows, cols);
    v = Matrix<Scalar>::Zero(rows, cols);
  }

  void zero_grad() { grad.setZero(); }

  template <typename Rng>
  void init_uniform(Scalar bound, Rng& rng) {
    std::uniform_real_distribution<double> u(-static_cast<double>(bound), static_cast<double>(bound));
    for (Eigen::Index i = 0; i < value.size(); ++i) value.data()[i] = static_cast<Scalar>(u(rng));
  }

  template <typename Rng>
  void init_normal(Scalar stddev, Rng& rng) {
    std::normal_distribution<double> n(0.0, static_cast<double>(stddev));
    for (Eigen::Index i = 0; i < value.size(); ++i) value.data()[i] = static_cast<Scalar>(n(rng));
  }

  template <typename Other>
  Param<Other> cast() const {
    Param<Other> out;
    out.value = value.template cast<Other>();
    out.grad = grad.template cast<Other>();
    out.m = m.template cast<Other>();
    out.v = v.template cast<Other>();
    return out;
  }
};

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Bias-corrected Adam over a list of parameters. `step_count` is part of the
// checkpointed optimizer state.
template <typename Scalar>
class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : options_(options) {}

  const AdamOptions& options() const { return options_; }
  void set_learning_rate(double lr) { options_.learning_rate = lr; }
  std::int64_t step_count() const { return t_; }
  void set_step_count(std::int64_t t) { t_ = t; }

  void step(const std::vector<Param<Scalar>*>& params) {
    ++t_;
    const Scalar b1 = static_cast<Scalar>(options_.beta1);
    const Scalar b2 = static_cast<Scalar>(options_.beta2);
    const Scalar c1 = static_cast<Scalar>(1.0 - std::pow(options_.beta1, static_cast<double>(t_)));
    const Scalar c2 = static_cast<Scalar>(1.0 - std::pow(options_.beta2, static_cast<double>(t_)));
    const Scalar lr = static_cast<Scalar>(options_.learning_rate);
    const Scalar eps = static_cast<Scalar>(options_.epsilon);
    for (Param<Scalar>* p : params) {
      p->m = b1 * p->m + (Scalar(1) - b1) * p->grad;
      p->v = b2 * p->v + (Scalar(1) - b2) * p->grad.cwiseAbs2();
      p->value.array() -= lr * (p->m.array() / c1) / ((p->v.array() / c2).sqrt() + eps);
    }
  }

 private:
  AdamOptions options_;
  std::int64_t t_ = 0;
};

}  // namespace xcoref
