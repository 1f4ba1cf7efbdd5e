#include "cp/numeric.hpp"

#include <algorithm>

namespace cp {

const char* errc_name(Errc e) {
  switch (e) {
    case Errc::DomainError: return "DomainError";
    case Errc::PerfectConductorHasNoEps: return "PerfectConductorHasNoEps";
    case Errc::RealPartUnavailable: return "RealPartUnavailable";
    case Errc::StaticDrudeDivergence: return "StaticDrudeDivergence";
    case Errc::DecompositionFailure: return "DecompositionFailure";
    case Errc::QuadratureFailure: return "QuadratureFailure";
    case Errc::MatsubaraBudgetExceeded: return "MatsubaraBudgetExceeded";
    case Errc::NonConvergence: return "NonConvergence";
    case Errc::InsufficientData: return "InsufficientData";
    case Errc::ParseError: return "ParseError";
    case Errc::UnknownId: return "UnknownId";
  }
  return "Error";
}

unsigned depth_for(std::size_t max_subdivisions) {
  unsigned d = 0;
  while ((std::size_t{1} << (d + 1)) <= max_subdivisions && d < 30) ++d;
  return std::max(d, 1u);
}

QuadResult integrate_pieces(const std::function<double(double)>& f, const std::vector<double>& pts,
                            double rel_tol, unsigned max_depth) {
  QuadResult r;
  CompensatedSum v, e;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    if (!(pts[i + 1] > pts[i])) continue;
    auto q = integrate(f, pts[i], pts[i + 1], rel_tol, max_depth);
    v.add(q.value);
    e.add(q.error);
  }
  r.value = v.value();
  r.error = e.value();
  return r;
}

std::vector<double> logspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  for (std::size_t i = 0; i < n; ++i)
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  out.back() = hi;
  return out;
}

}  // namespace cp
