#include "facecamo/adam.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "facecamo/errors.hpp"

namespace facecamo {

double lr_schedule(int i, int total, double lr_max, double lr_min) {
  if (total <= 0) return lr_max;
  if (i < 0 || i > total) throw ContractError("lr_schedule: iteration outside [0, total]");
  const double c = std::cos(std::numbers::pi * static_cast<double>(i) / total);
  // Weighted form keeps eta_0 == lr_max and eta_total == lr_min bit-exact.
  return lr_max * (0.5 * (1.0 + c)) + lr_min * (0.5 * (1.0 - c));
}

Adam::Adam(std::size_t size, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps), m_(size, 0.0), v_(size, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad, double lr) {
  if (params.size() != m_.size() || grad.size() != m_.size())
    throw ContractError("Adam::step: size mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    const double m_hat = m_[i] / c1;
    const double v_hat = v_[i] / c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + eps_);
  }
}

void Adam::reset() {
  t_ = 0;
  std::fill(m_.begin(), m_.end(), 0.0);
  std::fill(v_.begin(), v_.end(), 0.0);
}

}  // namespace facecamo
