#include "cp/dielectric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cp/constants.hpp"
#include "cp/error.hpp"
#include "cp/numeric.hpp"

namespace cp {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

void validate_set(const OscillatorSet& s, const char* what) {
  if (!std::isfinite(s.eps_inf) || s.eps_inf < 1.0)
    throw Error(Errc::DomainError, std::string(what) + ": eps_inf must be >= 1");
  for (std::size_t i = 0; i < s.oscillators.size(); ++i) {
    const auto& o = s.oscillators[i];
    if (!finite_positive(o.Omega) || !finite_positive(o.f) || !finite_positive(o.gamma))
      throw Error(Errc::DomainError, std::string(what) + ": oscillator parameters must be positive");
    if (i > 0 && !(s.oscillators[i - 1].Omega < o.Omega))
      throw Error(Errc::DomainError, std::string(what) + ": oscillators must ascend in Omega");
  }
}

double lorentz_sum_imag(const OscillatorSet& s, double xi) {
  double acc = 0.0;
  for (const auto& o : s.oscillators)
    acc += o.f * o.Omega * o.Omega / (o.Omega * o.Omega + xi * xi + o.gamma * xi);
  return acc;
}

// integral over [a, b) of h(w) with w = lower + scale*tan(theta).
QuadResult kk_segment(const std::function<double(double)>& h, double a, double b, double lower,
                      double scale, const std::vector<double>& breaks, double rel_tol) {
  auto theta_of = [&](double w) {
    return std::isinf(w) ? phys::pi / 2 : std::atan((w - lower) / scale);
  };
  std::vector<double> pts{theta_of(a)};
  for (double w : breaks)
    if (w > a && w < b) pts.push_back(theta_of(w));
  pts.push_back(theta_of(b));
  std::sort(pts.begin(), pts.end());
  auto g = [&](double th) {
    double ct = std::cos(th);
    if (ct <= 0.0) return 0.0;
    double w = lower + scale * std::tan(th);
    double v = h(w) * scale / (ct * ct);
    return std::isfinite(v) ? v : 0.0;
  };
  return integrate_pieces(g, pts, rel_tol, 20);
}

double kk_core(const std::function<double(double)>& im, double shift, double lower, double scale,
               std::vector<double> breakpoints, const std::vector<double>& poles, double rel_tol) {
  auto h = [&](double w) { return w * im(w) / (w * w + shift); };
  std::sort(breakpoints.begin(), breakpoints.end());
  std::vector<double> ps(poles.begin(), poles.end());
  std::sort(ps.begin(), ps.end());

  CompensatedSum total;
  double a = lower;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    double p = ps[i];
    double left = p - a;
    double right = (i + 1 < ps.size() ? ps[i + 1] : 2.0 * p) - p;
    double d = 0.25 * std::min(left, right);
    total.add(kk_segment(h, a, p - d, lower, scale, breakpoints, rel_tol).value);
    auto fold = [&](double u) { return h(p + u) + h(p - u); };
    total.add(integrate(fold, 0.0, d, rel_tol, 20).value);
    a = p + d;
  }
  total.add(kk_segment(h, a, std::numeric_limits<double>::infinity(), lower, scale, breakpoints,
                       rel_tol)
                .value);
  return 2.0 / phys::pi * total.value();
}

std::vector<double> tab_breaks(const TabulatedImEps& t) {
  return {t.Omega - t.gamma, t.Omega, t.Omega + t.gamma, t.Omega + 4 * t.gamma};
}

constexpr double kTabTol = 1e-10;

}  // namespace

double TabulatedImEps::im_eps(double omega) const {
  if (!(omega > Omega_T)) return 0.0;
  double d = omega * omega - Omega * Omega;
  double g2 = gamma * gamma * omega * omega;
  double den = denominator == SinxDenominator::Subtracted ? d * d - g2 : d * d + g2;
  double x = omega - Omega_T;
  return f * Omega * gamma * x * x / (den * omega);
}

std::vector<double> TabulatedImEps::poles() const {
  std::vector<double> out;
  if (denominator != SinxDenominator::Subtracted) return out;
  double r = std::sqrt(gamma * gamma + 4 * Omega * Omega);
  for (double w : {(r - gamma) / 2, (r + gamma) / 2})
    if (w > Omega_T) out.push_back(w);
  return out;
}

double StaticEps::reflection() const {
  if (infinite) return 1.0;
  return (value - 1.0) / (value + 1.0);
}

void validate(const PermittivityModel& m) {
  std::visit(overloaded{
                 [](const PerfectConductor&) {},
                 [](const DrudeLorentz& d) {
                   if (!finite_positive(d.Omega0) || !finite_positive(d.gamma0))
                     throw Error(Errc::DomainError, "drude-lorentz: Omega0, gamma0 must be > 0");
                   if (d.lorentz.eps_inf != 1.0)
                     throw Error(Errc::DomainError, "drude-lorentz: Lorentz part has eps_inf = 1");
                   validate_set(d.lorentz, "drude-lorentz");
                 },
                 [](const OscillatorSet& s) { validate_set(s, "oscillators"); },
                 [](const TabulatedImEps& t) {
                   if (!finite_positive(t.Omega_T) || !finite_positive(t.Omega) ||
                       !finite_positive(t.f) || !finite_positive(t.gamma))
                     throw Error(Errc::DomainError, "tabulated-im: parameters must be > 0");
                 },
                 [](const SemiQuantum4& q) {
                   if (!finite_positive(q.Omega_T) || !finite_positive(q.gamma_L) ||
                       !finite_positive(q.gamma_T) || !(q.Omega_L > q.Omega_T))
                     throw Error(Errc::DomainError,
                                 "semi-quantum: need Omega_L > Omega_T > 0 and positive widths");
                 },
             },
             m);
}

std::string model_type_name(const PermittivityModel& m) {
  return std::visit(overloaded{
                        [](const PerfectConductor&) { return "perfect-conductor"; },
                        [](const DrudeLorentz&) { return "drude-lorentz"; },
                        [](const OscillatorSet&) { return "oscillators"; },
                        [](const TabulatedImEps&) { return "tabulated-im"; },
                        [](const SemiQuantum4&) { return "semi-quantum"; },
                    },
                    m);
}

cplx eps_oscillators(const OscillatorSet& s, cplx omega) {
  const cplx i(0.0, 1.0);
  cplx acc = s.eps_inf;
  for (const auto& o : s.oscillators)
    acc += o.f * o.Omega * o.Omega / (o.Omega * o.Omega - omega * omega - i * o.gamma * omega);
  return acc;
}

cplx eval_eps_real(const PermittivityModel& m, double omega) {
  if (!(omega >= 0.0)) throw Error(Errc::DomainError, "omega must be >= 0");
  const cplx i(0.0, 1.0);
  return std::visit(
      overloaded{
          [](const PerfectConductor&) -> cplx {
            throw Error(Errc::PerfectConductorHasNoEps, "perfect conductor has no finite eps");
          },
          [&](const DrudeLorentz& d) -> cplx {
            if (omega == 0.0)
              throw Error(Errc::StaticDrudeDivergence, "Drude permittivity diverges at omega = 0");
            cplx w(omega, 0.0);
            return eps_oscillators(d.lorentz, w) - d.Omega0 * d.Omega0 / (w * (w + i * d.gamma0));
          },
          [&](const OscillatorSet& s) -> cplx { return eps_oscillators(s, cplx(omega, 0.0)); },
          [](const TabulatedImEps&) -> cplx {
            throw Error(Errc::RealPartUnavailable, "tabulated-im model defines only Im eps");
          },
          [&](const SemiQuantum4& q) -> cplx {
            cplx w(omega, 0.0);
            return (q.Omega_L * q.Omega_L - w * w - i * w * q.gamma_L) /
                   (q.Omega_T * q.Omega_T - w * w - i * w * q.gamma_T);
          },
      },
      m);
}

double eval_eps_imag(const PermittivityModel& m, double xi) {
  if (!(xi >= 0.0)) throw Error(Errc::DomainError, "xi must be >= 0");
  return std::visit(
      overloaded{
          [](const PerfectConductor&) -> double {
            throw Error(Errc::PerfectConductorHasNoEps, "perfect conductor has no finite eps");
          },
          [&](const DrudeLorentz& d) -> double {
            if (xi == 0.0)
              throw Error(Errc::StaticDrudeDivergence, "Drude permittivity diverges at xi = 0");
            return 1.0 + d.Omega0 * d.Omega0 / (xi * (xi + d.gamma0)) + lorentz_sum_imag(d.lorentz, xi);
          },
          [&](const OscillatorSet& s) -> double { return s.eps_inf + lorentz_sum_imag(s, xi); },
          [&](const TabulatedImEps& t) -> double {
            return kramers_kronig_imag([&t](double w) { return t.im_eps(w); }, xi, t.Omega_T,
                                       t.Omega_T, tab_breaks(t), t.poles(), 1.0, kTabTol);
          },
          [&](const SemiQuantum4& q) -> double {
            return (q.Omega_L * q.Omega_L + xi * xi + xi * q.gamma_L) /
                   (q.Omega_T * q.Omega_T + xi * xi + xi * q.gamma_T);
          },
      },
      m);
}

StaticEps static_eps(const PermittivityModel& m) {
  return std::visit(overloaded{
                        [](const PerfectConductor&) { return StaticEps::Infinite(); },
                        [](const DrudeLorentz&) { return StaticEps::Infinite(); },
                        [&](const OscillatorSet& s) {
                          double v = s.eps_inf;
                          for (const auto& o : s.oscillators) v += o.f;
                          return StaticEps{false, v};
                        },
                        [&](const TabulatedImEps&) { return StaticEps{false, eval_eps_imag(m, 0.0)}; },
                        [](const SemiQuantum4& q) {
                          return StaticEps{false, q.Omega_L * q.Omega_L / (q.Omega_T * q.Omega_T)};
                        },
                    },
                    m);
}

ReflectionPair refl_imag_eps(double eps, double xi, double kappa) {
  double q2 = (eps - 1.0) * xi * xi / (phys::c * phys::c);
  double k1 = std::sqrt(kappa * kappa + q2);
  double rs = -q2 / ((kappa + k1) * (kappa + k1));
  double rp = (eps - 1.0) * ((eps + 1.0) * kappa * kappa - xi * xi / (phys::c * phys::c)) /
              ((eps * kappa + k1) * (eps * kappa + k1));
  return {rs, rp};
}

ReflectionPair refl_imag_static(const StaticEps& eps) { return {0.0, eps.reflection()}; }

ReflectionPair refl_imag(const PermittivityModel& m, double xi, double kappa) {
  if (!(xi >= 0.0)) throw Error(Errc::DomainError, "xi must be >= 0");
  if (kappa < xi / phys::c * (1.0 - 1e-14))
    throw Error(Errc::DomainError, "kappa_perp below xi/c");
  if (std::holds_alternative<PerfectConductor>(m)) return {-1.0, 1.0};
  if (xi == 0.0) return refl_imag_static(static_eps(m));
  return refl_imag_eps(eval_eps_imag(m, xi), xi, kappa);
}

ComplexReflectionPair refl_real_eps(cplx eps, double omega, double k_par) {
  if (eps == cplx(1.0, 0.0)) return {cplx(0.0), cplx(0.0)};
  const cplx i(0.0, 1.0);
  double k0 = omega / phys::c;
  cplx kp = k_par <= k0 ? cplx(std::sqrt(k0 * k0 - k_par * k_par), 0.0)
                        : i * std::sqrt(k_par * k_par - k0 * k0);
  cplx k1 = std::sqrt(eps * (k0 * k0) - k_par * k_par);
  if (k1.imag() < 0.0 || (k1.imag() == 0.0 && k1.real() < 0.0)) k1 = -k1;
  return {(kp - k1) / (kp + k1), (eps * kp - k1) / (eps * kp + k1)};
}

ComplexReflectionPair refl_real(const PermittivityModel& m, double omega, double k_par) {
  if (!(omega > 0.0) || !(k_par >= 0.0))
    throw Error(Errc::DomainError, "refl_real needs omega > 0, k_par >= 0");
  if (std::holds_alternative<PerfectConductor>(m)) return {cplx(-1.0), cplx(1.0)};
  if (const auto* t = std::get_if<TabulatedImEps>(&m)) {
    if (omega >= t->Omega_T)
      throw Error(Errc::RealPartUnavailable, "tabulated-im real part only known below Omega_T");
    return refl_real_eps(cplx(tabulated_real_below_edge(*t, omega), 0.0), omega, k_par);
  }
  return refl_real_eps(eval_eps_real(m, omega), omega, k_par);
}

double kramers_kronig_imag(const std::function<double(double)>& im, double xi, double lower,
                           double scale, std::vector<double> breakpoints,
                           const std::vector<double>& poles, double baseline, double rel_tol) {
  return baseline + kk_core(im, xi * xi, lower, scale, std::move(breakpoints), poles, rel_tol);
}

double tabulated_real_below_edge(const TabulatedImEps& t, double omega) {
  if (!(omega < t.Omega_T))
    throw Error(Errc::RealPartUnavailable, "tabulated-im real part only known below Omega_T");
  return 1.0 + kk_core([&t](double w) { return t.im_eps(w); }, -omega * omega, t.Omega_T,
                       t.Omega_T, tab_breaks(t), t.poles(), kTabTol);
}

}  // namespace cp
