#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "cp/fitkit.hpp"
#include "cp/numeric.hpp"
#include "support.hpp"

using namespace cp;
using cptest::mat_as;

namespace {

std::vector<double> grid_for(const OscillatorSet& s, std::size_t n) {
  double lo = INFINITY, hi = 0.0;
  for (const auto& o : s.oscillators) {
    lo = std::min(lo, o.Omega);
    hi = std::max(hi, o.Omega);
  }
  return logspace(0.3 * lo, 3.0 * hi, n);
}

double worst_param_error(const OscillatorSet& a, const OscillatorSet& b) {
  double w = cptest::rel_err(a.eps_inf, b.eps_inf);
  for (std::size_t k = 0; k < a.oscillators.size(); ++k) {
    w = std::max(w, cptest::rel_err(a.oscillators[k].Omega, b.oscillators[k].Omega));
    w = std::max(w, cptest::rel_err(a.oscillators[k].f, b.oscillators[k].f));
    w = std::max(w, cptest::rel_err(a.oscillators[k].gamma, b.oscillators[k].gamma));
  }
  return w;
}

double worst_param_error(const SemiQuantum4& a, const SemiQuantum4& b) {
  return std::max({cptest::rel_err(a.Omega_L, b.Omega_L), cptest::rel_err(a.Omega_T, b.Omega_T),
                   cptest::rel_err(a.gamma_L, b.gamma_L), cptest::rel_err(a.gamma_T, b.gamma_T)});
}

SpectrumTable with_noise(SpectrumTable t, double level, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, level);
  for (auto& r : t.rows) {
    r.re_eps = *r.re_eps * (1.0 + n(rng));
    r.im_eps *= 1.0 + n(rng);
  }
  return t;
}

// Si3N4 is non-passive below about 5.6e15 rad/s
std::vector<double> si3n4_grid() { return logspace(6e15, 2e17, 200); }

void check_history(const FitReport& r) {
  for (std::size_t i = 1; i < r.history.size(); ++i) CHECK(r.history[i] <= r.history[i - 1]);
  CHECK(r.residual_rms >= 0.0);
}

}  // namespace

TEST_SUITE("fitkit") {

TEST_CASE("noise-free oscillator round trips") {
  for (const char* id : {"C60-film-optical", "C70-film-optical", "C60-film-infrared"}) {
    CAPTURE(id);
    auto truth = mat_as<OscillatorSet>(id);
    auto data = synthesize(truth, grid_for(truth, 200));
    auto rep = fit_oscillators(data, truth.oscillators.size());
    CHECK(rep.converged);
    CHECK(rep.residual_rms < 1e-8);
    auto got = std::get<OscillatorSet>(rep.model);
    REQUIRE(got.oscillators.size() == truth.oscillators.size());
    CHECK(worst_param_error(got, truth) < 1e-4);
    check_history(rep);
  }
}

TEST_CASE("exact start is a fixed point") {
  OscillatorSet one{1.3, {{5e15, 0.4, 6e14}}};
  auto data = synthesize(one, logspace(1e15, 3e16, 40));
  auto rep = fit_oscillators(data, 1, one);
  CHECK(rep.converged);
  CHECK(rep.iterations == 0);
  CHECK(rep.residual_rms < 1e-13);
  CHECK(worst_param_error(std::get<OscillatorSet>(rep.model), one) < 1e-14);
}

TEST_CASE("noisy oscillator round trip") {
  auto truth = mat_as<OscillatorSet>("C70-film-optical");
  auto clean = synthesize(truth, grid_for(truth, 500));
  auto data = with_noise(clean, 0.01, 20240601);
  double floor = 0.0;
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    floor += std::pow(*data.rows[i].re_eps - *clean.rows[i].re_eps, 2);
    floor += std::pow(data.rows[i].im_eps - clean.rows[i].im_eps, 2);
  }
  floor = std::sqrt(floor / static_cast<double>(2 * data.rows.size()));
  auto rep = fit_oscillators(data, truth.oscillators.size());
  CHECK(rep.converged);
  CHECK(rep.residual_rms <= 2.0 * floor);
  CHECK(worst_param_error(std::get<OscillatorSet>(rep.model), truth) < 0.10);
  check_history(rep);
}

TEST_CASE("semi-quantum round trips") {
  auto truth = mat_as<SemiQuantum4>("Si3N4");
  auto data = synthesize(truth, si3n4_grid());
  SUBCASE("automatic start") {
    auto rep = fit_semi_quantum(data);
    CHECK(rep.converged);
    auto got = std::get<SemiQuantum4>(rep.model);
    CHECK(worst_param_error(got, truth) < 1e-4);
    CHECK(std::fabs(static_eps(got).value - 4.10) <= 0.01);
    check_history(rep);
  }
  SUBCASE("exact start") {
    auto rep = fit_semi_quantum(data, truth);
    CHECK(rep.iterations == 0);
    CHECK(rep.residual_rms < 1e-13);
  }
  SUBCASE("noisy") {
    auto rep = fit_semi_quantum(with_noise(data, 0.01, 7));
    CHECK(worst_param_error(std::get<SemiQuantum4>(rep.model), truth) < 0.10);
  }
}

TEST_CASE("relative weighting also recovers the parameters") {
  auto truth = mat_as<OscillatorSet>("C60-film-optical");
  auto data = synthesize(truth, grid_for(truth, 200));
  FitOptions opt;
  opt.weighting = Weighting::Relative;
  auto rep = fit_oscillators(data, truth.oscillators.size(), std::nullopt, opt);
  CHECK(worst_param_error(std::get<OscillatorSet>(rep.model), truth) < 1e-4);
}

TEST_CASE("iteration budget exhaustion") {
  auto truth = mat_as<OscillatorSet>("C60-film-optical");
  auto data = synthesize(truth, grid_for(truth, 200));
  FitOptions opt;
  opt.max_iterations = 3;
  OscillatorSet bad = truth;
  for (auto& o : bad.oscillators) o.Omega *= 1.2;
  try {
    fit_oscillators(data, truth.oscillators.size(), bad, opt);
    FAIL("expected FitNonConvergence");
  } catch (const FitNonConvergence& e) {
    CHECK(e.code() == Errc::NonConvergence);
    CHECK_FALSE(e.report.converged);
    CHECK(e.report.residual_rms > 0.0);
  }
}

TEST_CASE("insufficient data") {
  auto truth = mat_as<OscillatorSet>("C60-film-optical");
  auto data = synthesize(truth, logspace(1e15, 1e17, 20));
  try {
    fit_oscillators(data, 9);
    FAIL("expected InsufficientData");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InsufficientData);
  }
  SpectrumTable im_only;
  for (double w : logspace(1e15, 1e17, 20)) im_only.rows.push_back({w, std::nullopt, 0.1});
  CHECK_THROWS_AS(fit_oscillators(im_only, 1), Error);
  CHECK_THROWS_AS(fit_oscillators(data, 0), Error);
}

TEST_CASE("spectrum CSV") {
  auto truth = mat_as<OscillatorSet>("C60-film-optical");
  auto t = synthesize(truth, logspace(1e15, 1e17, 25));
  std::stringstream ss;
  write_spectrum_csv(ss, t);
  auto back = read_spectrum_csv(ss);
  REQUIRE(back.rows.size() == t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    CHECK(back.rows[i].omega == t.rows[i].omega);
    CHECK(*back.rows[i].re_eps == *t.rows[i].re_eps);
    CHECK(back.rows[i].im_eps == t.rows[i].im_eps);
  }

  std::stringstream im("omega_rad_s,im_eps\n1e15,0.5\n2e15,0.25\n");
  auto ti = read_spectrum_csv(im);
  CHECK_FALSE(ti.has_real());
  CHECK(ti.rows.size() == 2);

  auto parse_fails = [](const std::string& text) {
    std::stringstream s(text);
    try {
      read_spectrum_csv(s);
    } catch (const Error& e) {
      return e.code() == Errc::ParseError || e.code() == Errc::DomainError;
    }
    return false;
  };
  CHECK(parse_fails("freq,re,im\n1,2,3\n"));
  CHECK(parse_fails("omega_rad_s,re_eps,im_eps\n1e15,abc,0.1\n"));
  CHECK(parse_fails("omega_rad_s,re_eps,im_eps\n1e15,1.0\n"));
  CHECK(parse_fails("omega_rad_s,re_eps,im_eps\n2e15,1,0.1\n1e15,1,0.1\n"));
  CHECK(parse_fails("omega_rad_s,re_eps,im_eps\n1e15,1,-0.1\n"));
}

TEST_CASE("report serialisation") {
  OscillatorSet one{1.3, {{5e15, 0.4, 6e14}}};
  auto rep = fit_oscillators(synthesize(one, logspace(1e15, 3e16, 40)), 1, one);
  auto j = fit_report_to_json(rep);
  CHECK(j["converged"] == true);
  CHECK(j["iterations"] == 0);
  CHECK(j["model"]["type"] == "oscillators");
  CHECK(j.contains("residual_rms"));
}

}  // TEST_SUITE
