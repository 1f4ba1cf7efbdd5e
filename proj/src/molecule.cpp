#include "cp/molecule.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "cp/constants.hpp"
#include "cp/error.hpp"

namespace cp {

namespace {

using Poly = std::vector<double>;

Poly poly_mul(const Poly& a, const Poly& b) {
  if (a.empty() || b.empty()) return {};
  Poly r(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
  return r;
}

void poly_axpy(Poly& y, double a, const Poly& x) {
  if (y.size() < x.size()) y.resize(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

template <class T>
T poly_eval(const Poly& p, T x) {
  T acc = 0.0;
  for (std::size_t i = p.size(); i-- > 0;) acc = acc * x + p[i];
  return acc;
}

Poly poly_deriv(const Poly& p) {
  Poly d;
  for (std::size_t i = 1; i < p.size(); ++i) d.push_back(static_cast<double>(i) * p[i]);
  return d;
}

double term_sym(const Transition& t, double weight, double xi, double width) {
  double w0 = t.omega;
  double pre = 2.0 * weight * t.dipole * t.dipole / (3.0 * phys::hbar);
  double base = w0 * w0 + xi * xi;
  double plus = (w0 + t.asymmetry * xi) / (base + xi * width / 2);
  double minus = (w0 - t.asymmetry * xi) / (base - xi * width / 2);
  return pre * 0.5 * (plus + minus);
}

template <class Term>
double sum_sym(const Molecule& mol, double T_m, Term term) {
  double acc = mol.residual_alpha_inf;
  for (const auto& t : mol.electronic) acc += term(t, 1.0);
  for (const auto& t : mol.phonon) acc += term(t, phonon_thermal_weight(t.omega, T_m));
  return acc;
}

}  // namespace

std::optional<double> Molecule::number_density() const {
  if (!lattice_constant) return std::nullopt;
  double a = *lattice_constant;
  return 4.0 / (a * a * a);
}

Molecule Molecule::electronic_only() const {
  Molecule m = *this;
  m.phonon.clear();
  return m;
}

Molecule Molecule::phonons_only() const {
  Molecule m = *this;
  m.electronic.clear();
  m.residual_alpha_inf = 0.0;
  return m;
}

void validate(const Molecule& m) {
  auto check = [&](const std::vector<Transition>& ts, const char* what) {
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const auto& t = ts[i];
      if (!(std::isfinite(t.omega) && t.omega > 0) || !(std::isfinite(t.dipole) && t.dipole > 0) ||
          !(std::isfinite(t.width) && t.width >= 0) || !std::isfinite(t.asymmetry))
        throw Error(Errc::DomainError, m.name + ": invalid " + what + " transition");
      if (i > 0 && ts[i - 1].omega > t.omega)
        throw Error(Errc::DomainError, m.name + ": " + what + " transitions must ascend");
    }
  };
  check(m.electronic, "electronic");
  check(m.phonon, "phonon");
  if (m.lattice_constant && !(*m.lattice_constant > 0))
    throw Error(Errc::DomainError, m.name + ": lattice constant must be > 0");
  if (!std::isfinite(m.residual_alpha_inf))
    throw Error(Errc::DomainError, m.name + ": residual_alpha_inf not finite");
}

cplx RationalAlpha::operator()(cplx omega) const {
  cplx x = cplx(0.0, -1.0) * omega / scale;
  return constant + poly_eval(numerator, x) / poly_eval(denominator, x);
}

RationalAlpha clausius_mosotti(const OscillatorSet& eps, double number_density) {
  if (!(number_density > 0)) throw Error(Errc::DomainError, "number density must be > 0");
  RationalAlpha r;
  double pre = 3.0 * phys::eps0 / number_density;
  double scale = 1.0;
  if (!eps.oscillators.empty()) {
    double lg = 0.0;
    for (const auto& o : eps.oscillators) lg += std::log(o.Omega);
    scale = std::exp(lg / static_cast<double>(eps.oscillators.size()));
  }
  r.scale = scale;

  // D_i(x) = W_i^2 + g_i x + x^2 in scaled units
  std::vector<Poly> D;
  for (const auto& o : eps.oscillators) {
    double W = o.Omega / scale, g = o.gamma / scale;
    D.push_back({W * W, g, 1.0});
  }
  Poly P{1.0};
  for (const auto& d : D) P = poly_mul(P, d);
  Poly S;
  for (std::size_t i = 0; i < D.size(); ++i) {
    Poly rest{1.0};
    for (std::size_t j = 0; j < D.size(); ++j)
      if (j != i) rest = poly_mul(rest, D[j]);
    double W = eps.oscillators[i].Omega / scale;
    poly_axpy(S, eps.oscillators[i].f * W * W, rest);
  }

  // alpha/pre = ((e-1)P + S) / ((e+2)P + S)
  Poly N, M;
  poly_axpy(N, eps.eps_inf - 1.0, P);
  poly_axpy(N, 1.0, S);
  poly_axpy(M, eps.eps_inf + 2.0, P);
  poly_axpy(M, 1.0, S);
  double c = (eps.eps_inf - 1.0) / (eps.eps_inf + 2.0);
  poly_axpy(N, -c, M);
  N.resize(M.size() - 1);  // leading terms cancel exactly
  double lead = M.back();
  for (auto& v : M) v /= lead;
  for (auto& v : N) v *= pre / lead;
  r.numerator = N;
  r.denominator = M;
  r.constant = pre * c;
  return r;
}

Decomposition decompose(const RationalAlpha& alpha, TransitionKind kind) {
  Decomposition out;
  out.residual_alpha_inf = alpha.constant;
  const Poly& M = alpha.denominator;
  if (M.empty() || M.back() == 0.0)
    throw Error(Errc::DecompositionFailure, "denominator leading coefficient is zero");
  std::size_t n = M.size() - 1;
  if (n == 0) return out;
  if (alpha.numerator.size() > n)
    throw Error(Errc::DecompositionFailure, "numerator degree must be below denominator degree");

  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 1; i < n; ++i) comp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;
  for (std::size_t i = 0; i < n; ++i)
    comp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(n - 1)) = -M[i] / M.back();
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
  if (es.info() != Eigen::Success) throw Error(Errc::DecompositionFailure, "root finding failed");

  Poly dM = poly_deriv(M);
  std::vector<cplx> roots;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    cplx x = es.eigenvalues()[i];
    for (int it = 0; it < 5; ++it) {  // Newton polish
      cplx d = poly_eval(dM, x);
      if (std::abs(d) == 0.0) break;
      cplx step = poly_eval(M, x) / d;
      x -= step;
      if (std::abs(step) <= 1e-16 * std::abs(x)) break;
    }
    roots.push_back(x);
  }

  std::vector<cplx> upper, lower;
  for (auto x : roots) {
    if (!(x.real() < 0.0))
      throw Error(Errc::DecompositionFailure, "pole outside the passive half plane");
    if (std::abs(x.imag()) <= 1e-12 * std::abs(x))
      throw Error(Errc::DecompositionFailure, "overdamped real pole cannot be paired");
    (x.imag() > 0 ? upper : lower).push_back(x);
  }
  if (upper.size() != lower.size())
    throw Error(Errc::DecompositionFailure, "unbalanced conjugate roots");
  std::vector<bool> used(lower.size(), false);

  struct Pair {
    double w0, width, A, B;
  };
  std::vector<Pair> pairs;
  const double s = alpha.scale;
  for (auto a : upper) {
    std::size_t best = lower.size();
    double bd = 0.0;
    for (std::size_t j = 0; j < lower.size(); ++j) {
      if (used[j]) continue;
      double d = std::abs(lower[j] - std::conj(a));
      if (best == lower.size() || d < bd) {
        best = j;
        bd = d;
      }
    }
    if (best == lower.size() || bd > 1e-6 * std::abs(a))
      throw Error(Errc::DecompositionFailure, "conjugate root pairing failed");
    used[best] = true;
    cplx r = poly_eval(alpha.numerator, a) / poly_eval(dM, a);
    double Bx = 2.0 * r.real();
    double Ax = -2.0 * (r * std::conj(a)).real();
    pairs.push_back({std::abs(a) * s, -4.0 * a.real() * s, Ax * s * s, Bx * s});
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& p, const Pair& q) { return p.w0 < q.w0; });

  std::vector<Pair> merged;
  for (const auto& p : pairs) {
    if (!merged.empty() && std::fabs(p.w0 - merged.back().w0) <= 1e-9 * p.w0) {
      auto& m = merged.back();
      m.A += p.A;
      m.B += p.B;
      continue;
    }
    merged.push_back(p);
  }
  for (const auto& p : merged) {
    if (!(p.A > 0.0))
      throw Error(Errc::DecompositionFailure, "non-positive oscillator strength");
    Transition t;
    t.omega = p.w0;
    t.dipole = std::sqrt(3.0 * phys::hbar * p.A / (2.0 * p.w0));
    t.width = p.width;
    t.kind = kind;
    t.asymmetry = p.B * p.w0 / p.A;
    out.transitions.push_back(t);
  }
  return out;
}

std::vector<double> populations(const LevelScheme& scheme, double T_m) {
  const auto& E = scheme.energies;
  if (E.empty()) return {};
  if (!(T_m >= 0)) throw Error(Errc::DomainError, "T_m must be >= 0");
  std::vector<double> p(E.size(), 0.0);
  double e0 = *std::min_element(E.begin(), E.end());
  if (T_m == 0.0) {
    double n0 = 0;
    for (double e : E) n0 += (e == e0);
    for (std::size_t i = 0; i < E.size(); ++i) p[i] = (E[i] == e0) ? 1.0 / n0 : 0.0;
    return p;
  }
  double kT = phys::k_B * T_m;
  double z = 0.0;
  for (std::size_t i = 0; i < E.size(); ++i) {
    p[i] = std::exp(-(E[i] - e0) / kT);
    z += p[i];
  }
  for (auto& v : p) v /= z;
  return p;
}

cplx transition_term(const Transition& t, cplx omega) {
  const cplx i(0.0, 1.0);
  double pre = 2.0 * t.dipole * t.dipole / (3.0 * phys::hbar);
  return pre * (t.omega - i * t.asymmetry * omega) /
         (t.omega * t.omega - omega * omega - i * omega * t.width / 2.0);
}

double phonon_thermal_weight(double omega, double T_m) {
  if (T_m == 0.0) return 1.0;
  double e = phys::hbar * omega;
  auto p = populations({{0.0, e}, {0.0, 0.0}}, T_m);
  double p0k = p[0] + p[1];
  return p0k * std::tanh(e / (2.0 * phys::k_B * T_m));
}

std::vector<Transition> remove_thermal_weight(std::vector<Transition> ts, double T_m) {
  for (auto& t : ts) t.dipole /= std::sqrt(phonon_thermal_weight(t.omega, T_m));
  return ts;
}

cplx alpha_ground(const Molecule& mol, cplx omega) {
  cplx acc = mol.residual_alpha_inf;
  for (const auto& t : mol.electronic) acc += transition_term(t, omega);
  for (const auto& t : mol.phonon) acc += transition_term(t, omega);
  return acc;
}

cplx alpha_thermal(const Molecule& mol, double T_m, cplx omega) {
  if (!(T_m >= 0)) throw Error(Errc::DomainError, "T_m must be >= 0");
  cplx acc = mol.residual_alpha_inf;
  for (const auto& t : mol.electronic) acc += transition_term(t, omega);
  for (const auto& t : mol.phonon)
    acc += phonon_thermal_weight(t.omega, T_m) * transition_term(t, omega);
  return acc;
}

double alpha_sym(const Molecule& mol, double T_m, double xi) {
  if (!(xi >= 0)) throw Error(Errc::DomainError, "xi must be >= 0");
  return sum_sym(mol, T_m, [xi](const Transition& t, double w) { return term_sym(t, w, xi, t.width); });
}

double alpha_sym_zero_width(const Molecule& mol, double T_m, double xi) {
  return sum_sym(mol, T_m, [xi](const Transition& t, double w) { return term_sym(t, w, xi, 0.0); });
}

}  // namespace cp
