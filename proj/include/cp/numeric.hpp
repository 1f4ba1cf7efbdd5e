#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "cp/error.hpp"

namespace cp {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
};

// Recursion depth that keeps the number of leaf panels below max_subdivisions.
unsigned depth_for(std::size_t max_subdivisions);

// Adaptive 21-point Gauss-Kronrod on [a, b]; b may be +infinity.
template <class F>
QuadResult integrate(F&& f, double a, double b, double rel_tol, unsigned max_depth = 13) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 21>;
  double err = 0.0, l1 = 0.0;
  double v = GK::integrate(f, a, b, max_depth, rel_tol, &err, &l1);
  if (!std::isfinite(v) || !std::isfinite(err))
    throw Error(Errc::QuadratureFailure, "non-finite integrand on [" + std::to_string(a) + ", " +
                                             std::to_string(b) + "]");
  return {v, err};
}

// Integrate over consecutive breakpoints (must be ascending; last may be +inf).
QuadResult integrate_pieces(const std::function<double(double)>& f, const std::vector<double>& pts,
                            double rel_tol, unsigned max_depth = 13);

// Neumaier compensated summation.
class CompensatedSum {
 public:
  void add(double x) {
    double t = s_ + x;
    if (std::fabs(s_) >= std::fabs(x))
      c_ += (s_ - t) + x;
    else
      c_ += (x - t) + s_;
    s_ = t;
  }
  double value() const { return s_ + c_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

std::vector<double> logspace(double lo, double hi, std::size_t n);
std::vector<double> linspace(double lo, double hi, std::size_t n);

}  // namespace cp
