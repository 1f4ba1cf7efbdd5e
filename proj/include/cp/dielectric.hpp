#pragma once

#include <complex>
#include <functional>
#include <string>
#include <variant>
#include <vector>

namespace cp {

using cplx = std::complex<double>;

struct Oscillator {
  double Omega = 0.0;  // rad/s
  double f = 0.0;
  double gamma = 0.0;  // rad/s
};

struct OscillatorSet {
  double eps_inf = 1.0;
  std::vector<Oscillator> oscillators;
};

struct DrudeLorentz {
  double Omega0 = 0.0;  // plasma frequency, rad/s
  double gamma0 = 0.0;  // rad/s
  OscillatorSet lorentz;
};

enum class SinxDenominator { Subtracted, Lorentzian };

// Only Im eps(omega) is known; the imaginary axis follows from Kramers-Kronig.
struct TabulatedImEps {
  double Omega_T = 0.0;
  double Omega = 0.0;
  double f = 0.0;  // rad/s
  double gamma = 0.0;
  SinxDenominator denominator = SinxDenominator::Lorentzian;

  double im_eps(double omega) const;
  // Real zeros of the denominator above Omega_T (only for the Subtracted form).
  std::vector<double> poles() const;
};

struct SemiQuantum4 {
  double Omega_L = 0.0;
  double Omega_T = 0.0;
  double gamma_L = 0.0;
  double gamma_T = 0.0;
};

struct PerfectConductor {};

using PermittivityModel =
    std::variant<PerfectConductor, DrudeLorentz, OscillatorSet, TabulatedImEps, SemiQuantum4>;

struct StaticEps {
  bool infinite = false;
  double value = 1.0;

  static StaticEps Infinite() { return {true, 0.0}; }
  // (eps - 1)/(eps + 1), exactly 1 when infinite.
  double reflection() const;
};

template <class T>
struct ReflectionPairT {
  T r_s{};
  T r_p{};
};
using ReflectionPair = ReflectionPairT<double>;
using ComplexReflectionPair = ReflectionPairT<cplx>;

void validate(const PermittivityModel& m);
std::string model_type_name(const PermittivityModel& m);

cplx eps_oscillators(const OscillatorSet& s, cplx omega);

cplx eval_eps_real(const PermittivityModel& m, double omega);
double eval_eps_imag(const PermittivityModel& m, double xi);
StaticEps static_eps(const PermittivityModel& m);

ReflectionPair refl_imag(const PermittivityModel& m, double xi, double kappa_perp);
ReflectionPair refl_imag_eps(double eps, double xi, double kappa_perp);
ReflectionPair refl_imag_static(const StaticEps& eps);

ComplexReflectionPair refl_real(const PermittivityModel& m, double omega, double k_par);
ComplexReflectionPair refl_real_eps(cplx eps, double omega, double k_par);

// baseline + (2/pi) * integral_lower^inf w im(w)/(w^2 + xi^2) dw, with w = lower + scale*tan(theta).
// Principal value is taken around any listed poles.
double kramers_kronig_imag(const std::function<double(double)>& im, double xi, double lower,
                           double scale, std::vector<double> breakpoints,
                           const std::vector<double>& poles, double baseline, double rel_tol);

// Real part below the absorption edge of a TabulatedImEps.
double tabulated_real_below_edge(const TabulatedImEps& t, double omega);

}  // namespace cp
