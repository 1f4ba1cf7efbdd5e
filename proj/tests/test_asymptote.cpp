#include <cmath>

#include "cp/asymptote.hpp"
#include "cp/constants.hpp"
#include "cp/numeric.hpp"
#include "support.hpp"

using namespace cp;
using cptest::mat;
using cptest::mol;

namespace {

double alpha0(const char* id) { return alpha_ground(mol(id).electronic_only(), 0.0).real(); }

double c4_pre(double a0) { return 3.0 * phys::hbar * phys::c * a0 / (64.0 * phys::pi * phys::pi * phys::eps0); }

double sum_d2(const std::vector<Transition>& ts) {
  double s = 0.0;
  for (const auto& t : ts) s += t.dipole * t.dipole;
  return s;
}

}  // namespace

TEST_SUITE("asymptote") {

TEST_CASE("thermal coefficient C3T") {
  CHECK_REL(c3t(alpha0("C60"), PerfectConductor{}, 300.0), 9.0e-50, 0.01);
  CHECK(c3t(alpha0("C60"), mat("vacuum"), 300.0) == 0.0);
  CHECK_REL(c3t(alpha0("C70"), mat("SiNx"), 300.0), 6.5e-50, 0.02);
  CHECK_REL(c3t(1e-39, StaticEps{false, 3.0}, 600.0),
            phys::k_B * 600.0 * 1e-39 / (16 * phys::pi * phys::eps0) * 0.5, 1e-14);
  CHECK_THROWS_AS(c3t(1e-39, PerfectConductor{}, 0.0), Error);
}

TEST_CASE("retarded coefficient C4 by quadrature") {
  double a = alpha0("C60");
  CHECK_REL(c4_integral(a, StaticEps::Infinite()), 3.3e-55, 0.02);
  CHECK_REL(c4_integral(a, StaticEps::Infinite()), 3.0 * phys::hbar * phys::c * a / (32 * phys::pi * phys::pi * phys::eps0),
            1e-14);
  CHECK(c4_integral(a, StaticEps{false, 1.0}) == 0.0);
  CHECK_REL(c4_integral(a, StaticEps{false, 4.10}), 1.5e-55, 0.03);
  // approaches the perfect-conductor limit
  CHECK_REL(c4_integral(a, StaticEps{false, 1e9}), c4_integral(a, StaticEps::Infinite()), 1e-4);
}

TEST_CASE("closed-form C4 matches quadrature") {
  double a = alpha0("C60");
  for (double e : {1.1, 2.0, 4.1, 10.0, 100.0, 1e4}) {
    CAPTURE(e);
    CHECK_REL(c4_closed(a, e), c4_integral(a, StaticEps{false, e}), 1e-10);
  }
  for (double e : logspace(1.01, 1e6, 50)) {
    CAPTURE(e);
    CHECK_REL(c4_closed(a, e), c4_integral(a, StaticEps{false, e}), 1e-10);
  }
  CHECK_THROWS_AS(c4_closed(a, 0.5), Error);
  CHECK(c4_closed(a, 1.0) == 0.0);
}

TEST_CASE("closed-form C4 limits") {
  double a = 1e-38, K = c4_pre(a);
  CHECK_REL(c4_closed(a, 1e12), 2.0 * K, 1e-5);
  CHECK_REL(c4_series(a, 1e30, C4Series::LargeEps), c4_integral(a, StaticEps::Infinite()), 1e-14);
  double chi = 1e-7;
  CHECK_REL(c4_closed(a, 1.0 + chi) / chi, 23.0 / 30.0 * K, 1e-6);
}

TEST_CASE("C4 series agree with the closed form in their regimes") {
  double a = 1e-38;
  CHECK_REL(c4_series(a, 1e4, C4Series::LargeEps), c4_closed(a, 1e4), 3e-4);
  CHECK_REL(c4_series(a, 1e6, C4Series::LargeEps), c4_closed(a, 1e6), 1e-4);
  CHECK_REL(c4_series(a, 1.001, C4Series::SmallChi), c4_closed(a, 1.001), 1e-4);
  CHECK_REL(c4_series(a, 1.0001, C4Series::SmallChi), c4_closed(a, 1.0001), 1e-4);
}

TEST_CASE("closed-form C4 increases with eps") {
  double prev = 0.0;
  for (double e : logspace(1.001, 1e7, 200)) {
    double v = c4_closed(1e-38, e);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("nonretarded C3") {
  auto c60 = mol("C60").electronic_only();
  double exact = sum_d2(c60.electronic) / (48.0 * phys::pi * phys::eps0);
  double zw = c3_nonret(c60, PerfectConductor{}, C3Mode::ZeroWidth);
  CHECK_REL(zw, exact, 1e-6);
  CHECK_REL(zw, 2.34e-47, 0.01);
  auto c70 = mol("C70");
  CHECK_REL(c3_nonret(c70, PerfectConductor{}, C3Mode::ZeroWidth), sum_d2(c70.electronic) / (48 * phys::pi * phys::eps0),
            1e-6);
  CHECK_REL(c3_nonret(c60, mat("Au"), C3Mode::Symmetrised), 1.01e-47, 0.02);
  CHECK_REL(c3_nonret(c60, mat("Si3N4"), C3Mode::LRT), 7.69e-48, 0.02);
  CHECK(c3_nonret(c60, mat("vacuum"), C3Mode::Symmetrised) == 0.0);
}

TEST_CASE("phonon C3") {
  auto c60 = mol("C60");
  CHECK_REL(c3_phonon(c60, 0.0), 3.4e-51, 0.03);
  CHECK_REL(c3_phonon(c60, 300.0), 2.6e-51, 0.03);
  // literal two-level sum is temperature independent
  CHECK_REL(c3_phonon(c60, 300.0, PhononC3Model::TwoLevelSum), c3_phonon(c60, 0.0), 1e-14);
  CHECK(c3_phonon(mol("C70"), 300.0) == 0.0);
  CHECK_REL(c3_phonon(c60, 0.0), sum_d2(c60.phonon) / (48 * phys::pi * phys::eps0), 1e-14);
}

TEST_CASE("coefficient sets") {
  SUBCASE("C60 on gold") {
    auto cs = coeff_set(mol("C60"), mat("Au"), 300.0, 300.0);
    CHECK_REL(cs.C3, 1.01e-47, 0.02);
    CHECK_REL(cs.C3_zero_width, 1.00e-47, 0.02);
    CHECK_REL(cs.C3_lrt, 9.28e-48, 0.02);
    CHECK_REL(cs.C4, 3.3e-55, 0.05);
    CHECK_REL(cs.C3T, 9.0e-50, 0.05);
  }
  SUBCASE("C70 on a perfect conductor") {
    auto cs = coeff_set(mol("C70"), PerfectConductor{}, 300.0, 0.0);
    CHECK_REL(cs.C3, 3.0e-47, 0.05);
    CHECK_REL(cs.C4, 4.0e-55, 0.05);
    CHECK_REL(cs.C3T, 1.1e-49, 0.05);
  }
  SUBCASE("vacuum") {
    auto cs = coeff_set(mol("C60"), mat("vacuum"), 300.0, 300.0);
    for (double v : {cs.C3, cs.C3_zero_width, cs.C3_lrt, cs.C4, cs.C3T, cs.C3_phonon}) CHECK(v == 0.0);
  }
}

TEST_CASE("coefficient orderings") {
  const char* surfaces[] = {"perfect-conductor", "Au", "Si3N4", "SiNx"};
  CoeffSet cs[2][4];
  for (int m = 0; m < 2; ++m)
    for (int s = 0; s < 4; ++s) cs[m][s] = coeff_set(mol(m ? "C70" : "C60"), mat(surfaces[s]), 300.0, 300.0);
  for (int m = 0; m < 2; ++m) {
    for (int s = 0; s < 4; ++s) {
      CAPTURE(m);
      CAPTURE(s);
      const auto& c = cs[m][s];
      CHECK(c.C3_lrt < c.C3_zero_width);
      CHECK(c.C3_zero_width < c.C3);
      CHECK(c.C3_lrt / c.C3 >= 0.87);
      CHECK(c.C3_lrt / c.C3 <= 0.95);
      CHECK(c.C3_zero_width / c.C3 >= 0.985);
      CHECK(c.C3_zero_width / c.C3 <= 1.0);
      CHECK(c.C3_phonon * 100.0 < c.C3);
    }
    for (int s = 0; s + 1 < 4; ++s) CHECK(cs[m][s].C3 > cs[m][s + 1].C3);
  }
  for (int s = 0; s < 4; ++s) {
    CHECK(cs[1][s].C3 > cs[0][s].C3);
    CHECK(cs[1][s].C3_zero_width > cs[0][s].C3_zero_width);
    CHECK(cs[1][s].C3_lrt > cs[0][s].C3_lrt);
    CHECK(cs[1][s].C4 > cs[0][s].C4);
    CHECK(cs[1][s].C3T > cs[0][s].C3T);
  }
}

}  // TEST_SUITE
