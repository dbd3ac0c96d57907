#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace setexp {

// Two-layer perceptron: inputs -> rectified hidden layer -> logistic output.
// Parameters are stored as Eigen dense objects templated on the scalar so the
// same code backs training (double) and finite-difference checks.
template <typename Scalar>
class Mlp {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  struct Gradients {
    Matrix w1;
    Vector b1;
    Vector w2;
    Scalar b2 = 0;
  };

  Mlp() = default;

  Mlp(int inputs, int hidden) : w1_(Matrix::Zero(hidden, inputs)), b1_(Vector::Zero(hidden)), w2_(Vector::Zero(hidden)) {}

  // He-initialized hidden weights, small output weights, zero biases.
  static Mlp random(int inputs, int hidden, std::uint64_t seed) {
    Mlp m(inputs, hidden);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> hidden_init(0.0, std::sqrt(2.0 / inputs));
    std::normal_distribution<double> out_init(0.0, std::sqrt(1.0 / hidden));
    for (Eigen::Index r = 0; r < m.w1_.rows(); ++r)
      for (Eigen::Index c = 0; c < m.w1_.cols(); ++c) m.w1_(r, c) = static_cast<Scalar>(hidden_init(rng));
    for (Eigen::Index r = 0; r < m.w2_.size(); ++r) m.w2_(r) = static_cast<Scalar>(out_init(rng));
    return m;
  }

  int inputs() const { return static_cast<int>(w1_.cols()); }
  int hidden() const { return static_cast<int>(w1_.rows()); }

  Matrix& w1() { return w1_; }
  Vector& b1() { return b1_; }
  Vector& w2() { return w2_; }
  Scalar& b2() { return b2_; }
  const Matrix& w1() const { return w1_; }
  const Vector& b1() const { return b1_; }
  const Vector& w2() const { return w2_; }
  Scalar b2() const { return b2_; }

  // Pre-sigmoid output for each column of `x` (inputs x batch).
  Vector logits(const Eigen::Ref<const Matrix>& x) const {
    const Matrix hidden = ((w1_ * x).colwise() + b1_).cwiseMax(Scalar(0));
    return (hidden.transpose() * w2_).array() + b2_;
  }

  Scalar predict(const Eigen::Ref<const Vector>& x) const {
    const Vector hidden = (w1_ * x + b1_).cwiseMax(Scalar(0));
    return sigmoid(w2_.dot(hidden) + b2_);
  }

  // Mean binary cross-entropy over the batch, computed from logits.
  Scalar loss(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Vector>& y) const {
    const Vector z = logits(x);
    Scalar total = 0;
    for (Eigen::Index i = 0; i < z.size(); ++i) total += softplus(z(i)) - y(i) * z(i);
    return total / static_cast<Scalar>(z.size());
  }

  Scalar loss_and_gradient(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Vector>& y, Gradients& g) const {
    const auto batch = static_cast<Scalar>(x.cols());
    const Matrix pre = (w1_ * x).colwise() + b1_;
    const Matrix hidden = pre.cwiseMax(Scalar(0));
    const Vector z = (hidden.transpose() * w2_).array() + b2_;
    Vector dz(z.size());
    Scalar total = 0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      total += softplus(z(i)) - y(i) * z(i);
      dz(i) = (sigmoid(z(i)) - y(i)) / batch;
    }
    g.w2 = hidden * dz;
    g.b2 = dz.sum();
    const Matrix dhidden = (w2_ * dz.transpose()).cwiseProduct((pre.array() > Scalar(0)).matrix().template cast<Scalar>());
    g.w1 = dhidden * x.transpose();
    g.b1 = dhidden.rowwise().sum();
    return total / batch;
  }

  Eigen::Index parameter_count() const { return w1_.size() + b1_.size() + w2_.size() + 1; }

  Vector parameters() const {
    Vector p(parameter_count());
    p << Eigen::Map<const Vector>(w1_.data(), w1_.size()), b1_, w2_, b2_;
    return p;
  }

  void set_parameters(const Eigen::Ref<const Vector>& p) {
    Eigen::Index o = 0;
    w1_ = Eigen::Map<const Matrix>(p.data(), w1_.rows(), w1_.cols());
    o += w1_.size();
    b1_ = p.segment(o, b1_.size());
    o += b1_.size();
    w2_ = p.segment(o, w2_.size());
    o += w2_.size();
    b2_ = p(o);
  }

  static Vector flatten(const Gradients& g) {
    Vector p(g.w1.size() + g.b1.size() + g.w2.size() + 1);
    p << Eigen::Map<const Vector>(g.w1.data(), g.w1.size()), g.b1, g.w2, g.b2;
    return p;
  }

  void apply(const Gradients& g, Scalar lr) {
    w1_ -= lr * g.w1;
    b1_ -= lr * g.b1;
    w2_ -= lr * g.w2;
    b2_ -= lr * g.b2;
  }

  bool all_finite() const { return w1_.allFinite() && b1_.allFinite() && w2_.allFinite() && std::isfinite(b2_); }

  friend bool operator==(const Mlp& a, const Mlp& b) {
    return a.w1_ == b.w1_ && a.b1_ == b.b1_ && a.w2_ == b.w2_ && a.b2_ == b.b2_;
  }

  static Scalar sigmoid(Scalar z) {
    const Scalar s = z >= 0 ? Scalar(1) / (Scalar(1) + std::exp(-z)) : std::exp(z) / (Scalar(1) + std::exp(z));
    constexpr Scalar lo = std::numeric_limits<Scalar>::min();
    const Scalar hi = Scalar(1) - std::numeric_limits<Scalar>::epsilon() / 2;
    return s < lo ? lo : (s > hi ? hi : s);
  }

  static Scalar softplus(Scalar z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

 private:
  Matrix w1_;
  Vector b1_;
  Vector w2_;
  Scalar b2_ = 0;
};

}  // namespace setexp
