#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace facecamo {

// Cosine annealing from lr_max (i = 0) to lr_min (i = total). Both endpoints
// are reproduced exactly.
double lr_schedule(int i, int total, double lr_max, double lr_min);

// Adam with bias correction. Moments persist across step() calls until
// reset(); callers may overwrite parameters between steps (clipping,
// projection) without touching the moments.
class Adam {
 public:
  explicit Adam(std::size_t size, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void step(std::span<double> params, std::span<const double> grad, double lr);
  void reset();

  std::size_t steps() const { return t_; }
  const std::vector<double>& first_moment() const { return m_; }
  const std::vector<double>& second_moment() const { return v_; }

 private:
  double beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::vector<double> m_, v_;
};

}  // namespace facecamo
