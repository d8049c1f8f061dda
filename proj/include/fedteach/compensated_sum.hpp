#pragma once

#include <cmath>

namespace fedteach {

/// Neumaier summation. Keeps long running totals (T * M terms) within a few
/// ulps of the exact sum, independent of how the terms are grouped.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      carry_ += (sum_ - t) + x;
    else
      carry_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

}  // namespace fedteach
