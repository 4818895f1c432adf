#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace gemith {

/// Neumaier-compensated running sum: adding many values loses far less
/// precision than a naive accumulator, and a fixed visiting order gives a
/// fixed result.
class CompensatedSum {
 public:
  void add(double value) {
    double t = sum_ + value;
    if (std::abs(sum_) >= std::abs(value)) {
      compensation_ += (sum_ - t) + value;
    } else {
      compensation_ += (value - t) + sum_;
    }
    sum_ = t;
  }

  double total() const { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

inline double compensated_mean(const std::vector<double>& values) {
  CompensatedSum sum;
  for (double v : values) sum.add(v);
  return values.empty() ? 0.0 : sum.total() / static_cast<double>(values.size());
}

}  // namespace gemith
