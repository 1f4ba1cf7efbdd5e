#include "cp/cpcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "cp/constants.hpp"
#include "cp/error.hpp"

namespace cp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// integral_{xi/c}^inf dkappa e^{-2 kappa z} [xi^2 r_s - (2 kappa^2 c^2 - xi^2) r_p]
// with t = 2 kappa z and s = t - t0; returns the value and the error estimate.
QuadResult kappa_integral(double xi, double z, double eps, bool perfect, double r0, double rel_tol,
                          unsigned depth) {
  const double c = phys::c;
  const double t0 = 2.0 * xi * z / c;
  if (xi == 0.0) {
    // static limit: r_s = 0, r_p = r0
    return {-c * c * r0 / (2.0 * z * z * z), 0.0};
  }
  auto F = [&](double s) {
    double t = t0 + s;
    double kappa = t / (2.0 * z);
    double rs, rp;
    if (perfect) {
      rs = -1.0;
      rp = 1.0;
    } else {
      auto r = refl_imag_eps(eps, xi, kappa);
      rs = r.r_s;
      rp = r.r_p;
    }
    double bracket = xi * xi * rs - (2.0 * kappa * kappa * c * c - xi * xi) * rp;
    return std::exp(-s) * bracket;
  };
  auto q = integrate_pieces(F, {0.0, 1.0, 10.0, 100.0, kInf}, rel_tol, depth);
  double pre = std::exp(-t0) / (2.0 * z);
  return {pre * q.value, pre * q.error};
}

double material_scale(const PermittivityModel& surf) {
  if (const auto* d = std::get_if<DrudeLorentz>(&surf)) {
    double s = d->gamma0;
    for (const auto& o : d->lorentz.oscillators) s = std::min(s, o.Omega);
    return s;
  }
  if (const auto* s = std::get_if<OscillatorSet>(&surf)) {
    double m = kInf;
    for (const auto& o : s->oscillators) m = std::min(m, o.Omega);
    return m;
  }
  if (const auto* t = std::get_if<TabulatedImEps>(&surf)) return t->Omega_T;
  if (const auto* q = std::get_if<SemiQuantum4>(&surf)) return q->Omega_T;
  return kInf;
}

cplx real_axis_eps(const PermittivityModel& surf, double omega) {
  if (const auto* t = std::get_if<TabulatedImEps>(&surf)) {
    if (omega < t->Omega_T) return tabulated_real_below_edge(*t, omega);
    throw Error(Errc::RealPartUnavailable, "tabulated-im real part only known below Omega_T");
  }
  return eval_eps_real(surf, omega);
}

cplx root_upper(cplx x) {
  cplx w = std::sqrt(x);
  if (w.imag() < 0.0 || (w.imag() == 0.0 && w.real() < 0.0)) w = -w;
  return w;
}

// Im Tr-type kernel of the resonant term divided by (omega/c), for one transition.
QuadResult resonant_kernel(const PermittivityModel& surf, double omega, double z,
                           const QuadratureSettings& q) {
  const cplx I(0.0, 1.0);
  const bool perfect = std::holds_alternative<PerfectConductor>(surf);
  const cplx eps = perfect ? cplx(0.0) : real_axis_eps(surf, omega);
  if (!perfect && eps == cplx(1.0, 0.0)) return {0.0, 0.0};
  const double a = 2.0 * omega * z / phys::c;
  const unsigned depth = depth_for(q.max_subdivisions);

  // propagating: k_perp = (omega/c) u, u in [0, 1]
  auto prop = [&](double u) {
    cplx rs, rp;
    if (perfect) {
      rs = -1.0;
      rp = 1.0;
    } else {
      cplx w = root_upper(eps - 1.0 + u * u);
      rs = (u - w) / (u + w);
      rp = (eps * u - w) / (eps * u + w);
    }
    return (std::exp(I * (a * u)) * (rs - (2.0 * u * u - 1.0) * rp)).imag();
  };
  const double quarter = 0.5 * phys::pi / a;
  std::vector<double> pts{0.0};
  if (quarter < 1.0) {
    auto n = static_cast<std::size_t>(std::ceil(1.0 / quarter));
    for (std::size_t k = 1; k < n; ++k) pts.push_back(static_cast<double>(k) * quarter);
  }
  pts.push_back(1.0);
  auto jp = integrate_pieces(prop, pts, q.rel_tol, depth);

  // evanescent: k_perp = i (omega/c) v, v = t / a
  auto evan = [&](double t) {
    double v = t / a;
    cplx rs, rp;
    if (perfect) {
      rs = -1.0;
      rp = 1.0;
    } else {
      cplx w = root_upper(eps - 1.0 - v * v);
      rs = (I * v - w) / (I * v + w);
      rp = (eps * I * v - w) / (eps * I * v + w);
    }
    return -std::exp(-t) * (rs + (2.0 * v * v + 1.0) * rp).real() / a;
  };
  std::vector<double> ept{0.0, 1.0, 10.0, 100.0, kInf};
  if (!perfect) {
    double vb = std::sqrt(std::abs(eps - 1.0));
    for (double f : {0.5, 1.0, 2.0})
      if (a * vb * f < 100.0) ept.push_back(a * vb * f);
  }
  std::sort(ept.begin(), ept.end());
  auto je = integrate_pieces(evan, ept, q.rel_tol, depth);
  return {jp.value + je.value, jp.error + je.error};
}

void check_z(double z) {
  if (!(z > 0.0) || !std::isfinite(z)) throw Error(Errc::DomainError, "z must be > 0");
}

}  // namespace

MatsubaraTable::MatsubaraTable(const Molecule& mol, const PermittivityModel& surf, double T, double T_m)
    : mol_(mol), surf_(surf), T_(T), T_m_(T_m), perfect_(std::holds_alternative<PerfectConductor>(surf)) {
  if (!(T > 0.0)) throw Error(Errc::DomainError, "Matsubara sum needs T > 0");
  r0_ = static_eps(surf).reflection();
}

double MatsubaraTable::xi(std::size_t j) const {
  return 2.0 * phys::pi * phys::k_B * T_ / phys::hbar * static_cast<double>(j);
}

void MatsubaraTable::grow(std::size_t j) {
  while (alpha_.size() <= j) {
    std::size_t k = alpha_.size();
    double x = xi(k);
    alpha_.push_back(alpha_sym(mol_, T_m_, x));
    if (perfect_ || k == 0)
      eps_.push_back(std::numeric_limits<double>::quiet_NaN());
    else
      eps_.push_back(eval_eps_imag(surf_, x));
  }
}

double MatsubaraTable::alpha(std::size_t j) {
  grow(j);
  return alpha_[j];
}

double MatsubaraTable::eps(std::size_t j) {
  grow(j);
  return eps_[j];
}

double n_thermal(double omega, double T) {
  if (!(omega > 0.0) || !(T >= 0.0)) throw Error(Errc::DomainError, "n_thermal needs omega > 0, T >= 0");
  if (T == 0.0) return 0.0;
  return 1.0 / std::expm1(phys::hbar * omega / (phys::k_B * T));
}

SumResult nonresonant_sum(MatsubaraTable& table, double z, const QuadratureSettings& q) {
  check_z(z);
  const double kT = phys::k_B * table.temperature();
  const double pre = phys::mu0 * kT / (8.0 * phys::pi);
  const unsigned depth = depth_for(q.max_subdivisions);

  SumResult out;
  CompensatedSum sum, err;
  double t0 = -kT * table.alpha(0) * table.static_reflection() / (16.0 * phys::pi * phys::eps0 * z * z * z);
  sum.add(t0);
  double prev = std::fabs(t0);
  int run = 0;
  for (std::size_t j = 1;; ++j) {
    if (j >= q.max_matsubara)
      throw Error(Errc::MatsubaraBudgetExceeded,
                  "Matsubara sum not converged after " + std::to_string(j) + " terms");
    double x = table.xi(j);
    auto k = kappa_integral(x, z, table.eps(j), table.perfect(), 0.0, q.rel_tol, depth);
    double a2 = 2.0 * table.alpha(j);
    double term = pre * a2 * k.value;
    sum.add(term);
    err.add(std::fabs(pre * a2 * k.error));
    double mag = std::fabs(term);
    if (mag == 0.0) {
      out.terms = j + 1;
      break;
    }
    run = mag < prev ? run + 1 : 0;
    double ratio = mag / prev;
    prev = mag;
    if (run >= 5 && ratio < 1.0) {
      double tail = mag * ratio / (1.0 - ratio);
      if (tail < q.matsubara_tail_tol * std::fabs(sum.value())) {
        err.add(tail);
        out.terms = j + 1;
        break;
      }
    }
  }
  out.value = sum.value();
  out.est_error = err.value();
  return out;
}

double u_nonresonant(const Molecule& mol, const PermittivityModel& surf, const EnvConfig& env,
                     const QuadratureSettings& q) {
  MatsubaraTable table(mol, surf, env.T, env.T_m);
  return nonresonant_sum(table, env.z, q).value;
}

QuadResult zero_temperature_integral(const Molecule& mol, const PermittivityModel& surf, double z,
                                     const QuadratureSettings& q, double T_m) {
  check_z(z);
  const bool perfect = std::holds_alternative<PerfectConductor>(surf);
  const double r0 = static_eps(surf).reflection();
  const double scale = phys::c / z;
  const unsigned depth = depth_for(q.max_subdivisions);
  auto g = [&](double u) {
    if (u >= 1.0) return 0.0;
    double om = 1.0 - u;
    double xi = scale * u / om;
    double eps = (perfect || xi == 0.0) ? 0.0 : eval_eps_imag(surf, xi);
    auto k = kappa_integral(xi, z, eps, perfect, r0, 0.01 * q.rel_tol, depth);
    return 2.0 * alpha_sym(mol, T_m, xi) * k.value * scale / (om * om);
  };
  std::vector<double> pts{0.0, 1.0};
  for (const auto* ts : {&mol.electronic, &mol.phonon})
    for (const auto& t : *ts) pts.push_back(t.omega / (t.omega + scale));
  double ms = material_scale(surf);
  if (std::isfinite(ms)) pts.push_back(ms / (ms + scale));
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  auto r = integrate_pieces(g, pts, q.rel_tol, depth);
  const double pre = phys::hbar * phys::mu0 / (16.0 * phys::pi * phys::pi);
  return {pre * r.value, std::fabs(pre * r.error)};
}

double u_zero_temperature(const Molecule& mol, const PermittivityModel& surf, double z,
                          const QuadratureSettings& q, double T_m) {
  return zero_temperature_integral(mol, surf, z, q, T_m).value;
}

double u_resonant(const Molecule& mol, const PermittivityModel& surf, const EnvConfig& env,
                  const QuadratureSettings& q) {
  check_z(env.z);
  if (!(env.T >= 0.0) || !(env.T_m >= 0.0)) throw Error(Errc::DomainError, "temperatures must be >= 0");
  CompensatedSum acc;
  for (const auto& t : mol.phonon) {
    auto p = populations({{0.0, phys::hbar * t.omega}, {0.0, 0.0}}, env.T_m);
    double n = n_thermal(t.omega, env.T);
    double W = p[1] * (n + 1.0) - p[0] * n;
    if (W == 0.0) continue;
    auto J = resonant_kernel(surf, t.omega, env.z, q);
    double k0 = t.omega / phys::c;
    acc.add(phys::mu0 / (12.0 * phys::pi) * W * t.omega * t.omega * t.dipole * t.dipole * k0 * J.value);
  }
  return acc.value();
}

bool use_zero_temperature_limit(const Molecule& mol, const PermittivityModel& surf, double T, double z) {
  if (T == 0.0) return true;
  double scale = std::min(phys::c / (2.0 * z), material_scale(surf));
  for (const auto* ts : {&mol.electronic, &mol.phonon})
    for (const auto& t : *ts) scale = std::min(scale, t.omega);
  double xi1 = 2.0 * phys::pi * phys::k_B * T / phys::hbar;
  return xi1 < 1e-4 * scale;
}

namespace {

PotentialResult total_with(MatsubaraTable* table, const Molecule& mol, const PermittivityModel& surf,
                           const EnvConfig& env, const QuadratureSettings& q) {
  PotentialResult r;
  if (table == nullptr || use_zero_temperature_limit(mol, surf, env.T, env.z)) {
    auto zt = zero_temperature_integral(mol, surf, env.z, q, env.T_m);
    r.nonresonant = zt.value;
    r.est_error = zt.error;
  } else {
    auto s = nonresonant_sum(*table, env.z, q);
    r.nonresonant = s.value;
    r.matsubara_terms_used = s.terms;
    r.est_error = s.est_error;
  }
  r.resonant = u_resonant(mol, surf, env, q);
  r.total = r.nonresonant + r.resonant;
  return r;
}

}  // namespace

PotentialResult u_total(const Molecule& mol, const PermittivityModel& surf, const EnvConfig& env,
                        const QuadratureSettings& q) {
  check_z(env.z);
  if (!(env.T >= 0.0) || !(env.T_m >= 0.0)) throw Error(Errc::DomainError, "temperatures must be >= 0");
  if (env.T == 0.0) return total_with(nullptr, mol, surf, env, q);
  MatsubaraTable table(mol, surf, env.T, env.T_m);
  return total_with(&table, mol, surf, env, q);
}

std::vector<PotentialResult> u_total_curve(const Molecule& mol, const PermittivityModel& surf,
                                           double T, double T_m, const std::vector<double>& zs,
                                           const QuadratureSettings& q) {
  std::vector<PotentialResult> out;
  out.reserve(zs.size());
  if (!(T >= 0.0) || !(T_m >= 0.0)) throw Error(Errc::DomainError, "temperatures must be >= 0");
  std::optional<MatsubaraTable> table;
  if (T > 0.0) table.emplace(mol, surf, T, T_m);
  for (double z : zs) {
    check_z(z);
    out.push_back(total_with(table ? &*table : nullptr, mol, surf, {T, T_m, z}, q));
  }
  return out;
}

}  // namespace cp
