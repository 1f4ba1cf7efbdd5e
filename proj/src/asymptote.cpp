#include "cp/asymptote.hpp"

#include <algorithm>
#include <cmath>
#include <quadmath.h>

#include "cp/constants.hpp"
#include "cp/error.hpp"
#include "cp/numeric.hpp"

namespace cp {

namespace {

double c4_prefactor(double alpha0) {
  return 3.0 * phys::hbar * phys::c * alpha0 / (64.0 * phys::pi * phys::pi * phys::eps0);
}

// Bracket of the closed form; the three groups cancel to ~10 digits at large eps
// and near eps = 1, so this runs in quad precision.
double c4_bracket(double eps_in) {
  __float128 e = eps_in;
  __float128 se = sqrtq(e), sp = sqrtq(e + 1), sm = sqrtq(e - 1);
  __float128 a = (10 - 3 * se - 4 * e - 3 * e * se + 6 * e * e) / (3 * (e - 1));
  __float128 b = e * e / sp * (logq((sp - 1) / (sp + 1)) + 2 * logq(se + sp));
  __float128 c = (2 * e * e * e - 4 * e * e + 3 * e + 1) / ((e - 1) * sm) * logq(se + sm);
  return static_cast<double>(a + b - c);
}

double molecule_ref_frequency(const Molecule& mol) {
  std::vector<double> w;
  for (const auto& t : mol.electronic) w.push_back(t.omega);
  if (w.empty())
    for (const auto& t : mol.phonon) w.push_back(t.omega);
  if (w.empty()) return 1e16;
  std::sort(w.begin(), w.end());
  std::size_t n = w.size();
  return n % 2 ? w[n / 2] : std::sqrt(w[n / 2 - 1] * w[n / 2]);
}

double reflection_factor(const PermittivityModel& surf, double xi) {
  if (std::holds_alternative<PerfectConductor>(surf)) return 1.0;
  if (xi == 0.0) return static_eps(surf).reflection();
  double e = eval_eps_imag(surf, xi);
  return (e - 1.0) / (e + 1.0);
}

}  // namespace

double c3t(double alpha0, const StaticEps& eps, double T) {
  if (!(T > 0)) throw Error(Errc::DomainError, "C3T needs T > 0");
  return phys::k_B * T * alpha0 / (16.0 * phys::pi * phys::eps0) * eps.reflection();
}

double c3t(double alpha0, const PermittivityModel& surf, double T) {
  return c3t(alpha0, static_eps(surf), T);
}

double c4_integral(double alpha0, const StaticEps& eps) {
  if (eps.infinite) return 2.0 * c4_prefactor(alpha0);
  double e = eps.value;
  if (!(e >= 1.0)) throw Error(Errc::DomainError, "static eps must be >= 1");
  if (e == 1.0) return 0.0;
  // v = 1/s
  auto g = [e](double s) {
    double s2 = s * s;
    double w = std::sqrt(1.0 + (e - 1.0) * s2);
    double rp = (e - 1.0) * (e + 1.0 - s2) / ((e + w) * (e + w));
    double rs = -(e - 1.0) * s2 / ((1.0 + w) * (1.0 + w));
    return (2.0 - s2) * rp - s2 * rs;
  };
  return c4_prefactor(alpha0) * integrate(g, 0.0, 1.0, 1e-14, 20).value;
}

double c4_series(double alpha0, double eps, C4Series regime) {
  if (regime == C4Series::LargeEps) {
    if (!(eps > 0)) throw Error(Errc::DomainError, "large-eps series needs eps > 0");
    return c4_prefactor(alpha0) * (2.0 - 5.0 / (2.0 * std::sqrt(eps)) + 44.0 / (15.0 * eps));
  }
  double chi = eps - 1.0;
  return c4_prefactor(alpha0) * (23.0 / 30.0 * chi - 169.0 / 420.0 * chi * chi);
}

double c4_closed(double alpha0, double eps) {
  if (!(eps >= 1.0)) throw Error(Errc::DomainError, "static eps must be >= 1");
  if (eps == 1.0) return 0.0;
  if (eps < 1.0 + 1e-4) return c4_series(alpha0, eps, C4Series::SmallChi);
  if (eps > 1e8) return c4_series(alpha0, eps, C4Series::LargeEps);
  return c4_prefactor(alpha0) * c4_bracket(eps);
}

double c3_nonret(const Molecule& mol, const PermittivityModel& surf, C3Mode mode) {
  const double wref = molecule_ref_frequency(mol);
  auto alpha = [&](double xi) {
    switch (mode) {
      case C3Mode::Symmetrised: return alpha_sym(mol, 0.0, xi);
      case C3Mode::ZeroWidth: return alpha_sym_zero_width(mol, 0.0, xi);
      case C3Mode::LRT: return alpha_ground(mol, cplx(0.0, xi)).real();
    }
    return 0.0;
  };
  auto g = [&](double u) {
    if (u >= 1.0) return 0.0;
    double om = 1.0 - u;
    double xi = wref * u / om;
    return alpha(xi) * reflection_factor(surf, xi) * wref / (om * om);
  };
  std::vector<double> pts{0.0};
  for (const auto* ts : {&mol.electronic, &mol.phonon})
    for (const auto& t : *ts) pts.push_back(t.omega / (t.omega + wref));
  pts.push_back(1.0);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  double I = integrate_pieces(g, pts, 1e-10, 15).value;
  return phys::hbar / (16.0 * phys::pi * phys::pi * phys::eps0) * I;
}

double c3_phonon(const Molecule& mol, double T_m, PhononC3Model model) {
  if (!(T_m >= 0)) throw Error(Errc::DomainError, "T_m must be >= 0");
  double acc = 0.0;
  for (const auto& t : mol.phonon) {
    double e = phys::hbar * t.omega;
    auto p = populations({{0.0, e}, {0.0, 0.0}}, T_m);
    double d2 = t.dipole * t.dipole;
    if (model == PhononC3Model::TwoLevelSum)
      acc += (p[0] + p[1]) * d2;
    else
      acc += (p[0] - p[1]) * phonon_thermal_weight(t.omega, T_m) * d2;
  }
  return acc / (48.0 * phys::pi * phys::eps0);
}

CoeffSet coeff_set(const Molecule& mol, const PermittivityModel& surf, double T, double T_m) {
  CoeffSet cs;
  Molecule el = mol.electronic_only();
  StaticEps st = static_eps(surf);
  double alpha0 = alpha_ground(el, 0.0).real();
  cs.C3 = c3_nonret(el, surf, C3Mode::Symmetrised);
  cs.C3_zero_width = c3_nonret(el, surf, C3Mode::ZeroWidth);
  cs.C3_lrt = c3_nonret(el, surf, C3Mode::LRT);
  cs.C4 = c4_integral(alpha0, st);
  cs.C3T = c3t(alpha0, st, T);
  cs.C3_phonon = c3_phonon(mol, T_m) * st.reflection();
  return cs;
}

}  // namespace cp
