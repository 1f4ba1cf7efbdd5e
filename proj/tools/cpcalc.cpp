#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "cp/asymptote.hpp"
#include "cp/constants.hpp"
#include "cp/cpcore.hpp"
#include "cp/database.hpp"
#include "cp/fitkit.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 2, kNumerical = 3, kNoConvergence = 4 };

struct RunConfig {
  std::string molecule = "C60";
  std::string surface = "Au";
  double T = 300.0;
  double T_m = 300.0;
  double z_min = 1e-9;
  double z_max = 1e-4;
  std::size_t points = 200;
  std::string scale = "log";
  std::string output;
  std::string format;
  bool all = false;
  bool phonons = false;
  std::string sinx_denominator;
  // eps / alpha
  std::vector<double> xi;
  double xi_min = 1e12;
  double xi_max = 1e18;
  std::string alpha_kind = "sym";
  // fit
  std::string input;
  std::string model = "oscillators";
  std::size_t n = 1;
  std::string weight = "unweighted";
  std::string init;
  std::size_t max_iterations = 10000;
  // numerics
  cp::QuadratureSettings q;
};

class UsageError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

cp::PermittivityModel material(const RunConfig& cfg, const std::string& id) {
  auto m = cp::load_material(id);
  if (!cfg.sinx_denominator.empty())
    if (auto* t = std::get_if<cp::TabulatedImEps>(&m))
      t->denominator = cfg.sinx_denominator == "subtracted" ? cp::SinxDenominator::Subtracted
                                                       : cp::SinxDenominator::Lorentzian;
  return m;
}

cp::Molecule molecule(const RunConfig& cfg, const std::string& id) {
  auto m = cp::load_molecule(id);
  return cfg.phonons ? m : m.electronic_only();
}

std::vector<double> grid(double lo, double hi, std::size_t n, const std::string& scale) {
  if (!(lo < hi)) throw UsageError("grid minimum must be below maximum");
  if (n < 2) throw UsageError("need at least 2 points");
  if (scale == "log") {
    if (!(lo > 0)) throw UsageError("log grid needs a positive minimum");
    return cp::logspace(lo, hi, n);
  }
  return cp::linspace(lo, hi, n);
}

struct Output {
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file.open(path);
      if (!file) throw UsageError("cannot open output " + path);
    }
  }
  std::ostream& os() { return file.is_open() ? static_cast<std::ostream&>(file) : std::cout; }
  std::ofstream file;
};

int cmd_coeffs(const RunConfig& cfg) {
  std::vector<cp::CoeffRow> rows;
  std::vector<std::pair<std::string, std::string>> pairs;
  if (cfg.all) {
    for (const char* s : {"perfect-conductor", "Au", "Si3N4", "SiNx"})
      for (const char* m : {"C60", "C70"}) pairs.emplace_back(m, s);
  } else {
    pairs.emplace_back(cfg.molecule, cfg.surface);
  }
  for (const auto& [m, s] : pairs) {
    auto mol = cp::load_molecule(m);
    auto surf = material(cfg, s);
    rows.push_back({m, s, cp::coeff_set(mol, surf, cfg.T, cfg.T_m)});
  }
  Output out(cfg.output);
  if (cfg.format == "json") {
    cp::json arr = cp::json::array();
    for (const auto& r : rows) {
      cp::json j{{"molecule", r.molecule}, {"surface", r.surface}, {"T_K", cfg.T}, {"T_m_K", cfg.T_m}};
      auto c = cp::coeffs_to_json(r.coeffs);
      for (auto& [k, v] : c.items()) j[k] = v;
      arr.push_back(j);
    }
    out.os() << arr.dump(2) << '\n';
  } else if (cfg.format == "csv") {
    out.os() << "molecule,surface,C3_Jm3,C3_zero_width_Jm3,C3_lrt_Jm3,C4_Jm4,C3T_Jm3,C3_phonon_Jm3\n";
    for (const auto& r : rows) {
      const auto& c = r.coeffs;
      out.os() << r.molecule << ',' << r.surface;
      for (double v : {c.C3, c.C3_zero_width, c.C3_lrt, c.C4, c.C3T, c.C3_phonon})
        out.os() << ',' << cp::format_sci(v, 12);
      out.os() << '\n';
    }
  } else {
    out.os() << cp::coeff_table(rows);
  }
  return kOk;
}

int cmd_potential(const RunConfig& cfg) {
  if (!(cfg.z_min > 0)) throw UsageError("z-min must be > 0");
  auto zs = grid(cfg.z_min, cfg.z_max, cfg.points, cfg.scale);
  auto mol = molecule(cfg, cfg.molecule);
  auto surf = material(cfg, cfg.surface);

  std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, zs.size());
  std::vector<std::vector<cp::PotentialResult>> parts(workers);
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  std::size_t chunk = (zs.size() + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        std::size_t a = w * chunk, b = std::min(zs.size(), a + chunk);
        if (a >= b) return;
        std::vector<double> sub(zs.begin() + static_cast<long>(a), zs.begin() + static_cast<long>(b));
        parts[w] = cp::u_total_curve(mol, surf, cfg.T, cfg.T_m, sub, cfg.q);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<cp::PotentialResult> res;
  for (auto& p : parts) res.insert(res.end(), p.begin(), p.end());

  Output out(cfg.output);
  if (cfg.format == "json") {
    cp::json arr = cp::json::array();
    for (std::size_t i = 0; i < zs.size(); ++i)
      arr.push_back({{"z_m", zs[i]},
                     {"U_total_J", res[i].total},
                     {"U_nonres_J", res[i].nonresonant},
                     {"U_res_J", res[i].resonant},
                     {"matsubara_terms", res[i].matsubara_terms_used},
                     {"est_error_J", res[i].est_error}});
    out.os() << arr.dump(2) << '\n';
  } else {
    out.os() << "z_m,U_total_J,U_nonres_J,U_res_J\n";
    for (std::size_t i = 0; i < zs.size(); ++i)
      out.os() << cp::format_sci(zs[i], 15) << ',' << cp::format_sci(res[i].total, 15) << ','
               << cp::format_sci(res[i].nonresonant, 15) << ',' << cp::format_sci(res[i].resonant, 15)
               << '\n';
  }
  return kOk;
}

std::vector<double> xi_grid(const RunConfig& cfg) {
  if (!cfg.xi.empty()) {
    for (double x : cfg.xi)
      if (!(x >= 0)) throw UsageError("xi must be >= 0");
    return cfg.xi;
  }
  return grid(cfg.xi_min, cfg.xi_max, cfg.points, cfg.scale);
}

void emit_xy(const RunConfig& cfg, const std::vector<double>& xs, const std::vector<double>& ys) {
  Output out(cfg.output);
  if (cfg.format == "json") {
    cp::json arr = cp::json::array();
    for (std::size_t i = 0; i < xs.size(); ++i) arr.push_back({{"xi_rad_s", xs[i]}, {"value", ys[i]}});
    out.os() << arr.dump(2) << '\n';
    return;
  }
  out.os() << "xi_rad_s,value\n";
  for (std::size_t i = 0; i < xs.size(); ++i)
    out.os() << cp::format_sci(xs[i], 15) << ',' << cp::format_sci(ys[i], 15) << '\n';
}

int cmd_eps(const RunConfig& cfg) {
  auto m = material(cfg, cfg.surface);
  auto xs = xi_grid(cfg);
  std::vector<double> ys;
  for (double x : xs) {
    if (x == 0.0) {
      auto st = cp::static_eps(m);
      ys.push_back(st.infinite ? INFINITY : st.value);
    } else if (std::holds_alternative<cp::PerfectConductor>(m)) {
      ys.push_back(INFINITY);
    } else {
      ys.push_back(cp::eval_eps_imag(m, x));
    }
  }
  emit_xy(cfg, xs, ys);
  return kOk;
}

int cmd_alpha(const RunConfig& cfg) {
  auto mol = molecule(cfg, cfg.molecule);
  auto xs = xi_grid(cfg);
  std::vector<double> ys;
  for (double x : xs) {
    if (cfg.alpha_kind == "sym")
      ys.push_back(cp::alpha_sym(mol, cfg.T_m, x));
    else
      ys.push_back(cp::alpha_thermal(mol, cfg.T_m, cp::cplx(0.0, x)).real());
  }
  emit_xy(cfg, xs, ys);
  return kOk;
}

int cmd_fit(const RunConfig& cfg) {
  std::ifstream in(cfg.input);
  if (!in) throw UsageError("cannot read " + cfg.input);
  cp::SpectrumTable data;
  try {
    data = cp::read_spectrum_csv(in);
  } catch (const cp::Error& e) {
    throw UsageError(e.what());
  }
  cp::FitOptions opt;
  opt.weighting = cfg.weight == "relative" ? cp::Weighting::Relative : cp::Weighting::Unweighted;
  opt.max_iterations = cfg.max_iterations;
  std::optional<cp::PermittivityModel> init;
  if (!cfg.init.empty()) {
    std::ifstream f(cfg.init);
    if (!f) throw UsageError("cannot read " + cfg.init);
    init = cp::material_from_json(cp::json::parse(f));
  }
  Output out(cfg.output);
  auto write = [&](const cp::FitReport& r) { out.os() << cp::fit_report_to_json(r).dump(2) << '\n'; };
  try {
    cp::FitReport rep;
    if (cfg.model == "semi-quantum") {
      std::optional<cp::SemiQuantum4> i0;
      if (init) {
        if (!std::holds_alternative<cp::SemiQuantum4>(*init)) throw UsageError("init must be semi-quantum");
        i0 = std::get<cp::SemiQuantum4>(*init);
      }
      rep = cp::fit_semi_quantum(data, i0, opt);
    } else {
      std::optional<cp::OscillatorSet> i0;
      if (init) {
        if (!std::holds_alternative<cp::OscillatorSet>(*init)) throw UsageError("init must be oscillators");
        i0 = std::get<cp::OscillatorSet>(*init);
      }
      rep = cp::fit_oscillators(data, cfg.n, i0, opt);
    }
    write(rep);
  } catch (const cp::FitNonConvergence& e) {
    write(e.report);
    std::cerr << "cpcalc: " << e.what() << '\n';
    return kNoConvergence;
  }
  return kOk;
}

int cmd_doctor() {
  int bad = 0;
  auto dir = cp::data_dir();
  std::cout << "data directory: " << dir.string() << '\n';
  auto mats = cp::list_materials(dir);
  auto mols = cp::list_molecules(dir);
  if (mats.empty() || mols.empty()) {
    std::cout << "FAIL no database files found\n";
    return kUsage;
  }
  for (const auto& id : mats) {
    try {
      auto m = cp::load_material(id, dir);
      std::cout << "ok   material " << id << " (" << cp::model_type_name(m) << ")\n";
    } catch (const std::exception& e) {
      std::cout << "FAIL material " << id << ": " << e.what() << '\n';
      ++bad;
    }
  }
  for (const auto& id : mols) {
    try {
      auto m = cp::load_molecule(id, dir);
      std::cout << "ok   molecule " << id << " (" << m.electronic.size() << " electronic, "
                << m.phonon.size() << " phonon)\n";
    } catch (const std::exception& e) {
      std::cout << "FAIL molecule " << id << ": " << e.what() << '\n';
      ++bad;
    }
  }
  return bad ? kUsage : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Thermal Casimir-Polder potentials of fullerenes near planar surfaces"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto add_temps = [&](CLI::App* s) {
    s->add_option("--T", cfg.T, "environment temperature [K]")->check(CLI::NonNegativeNumber);
    s->add_option("--Tm", cfg.T_m, "molecule internal temperature [K]")->check(CLI::NonNegativeNumber);
  };
  auto add_out = [&](CLI::App* s, const std::vector<std::string>& formats) {
    s->add_option("--output,-o", cfg.output, "output file (default stdout)");
    s->add_option("--format", cfg.format, "output format")->check(CLI::IsMember(formats));
  };
  auto add_sinx = [&](CLI::App* s) {
    s->add_option("--sinx-denominator", cfg.sinx_denominator, "tabulated-im denominator form")
        ->check(CLI::IsMember({"subtracted", "lorentzian"}));
  };

  auto* coeffs = app.add_subcommand("coeffs", "asymptotic power-law coefficients");
  coeffs->add_option("--molecule", cfg.molecule, "molecule id");
  coeffs->add_option("--surface", cfg.surface, "surface material id");
  coeffs->add_flag("--all", cfg.all, "all fullerene/surface pairs");
  add_temps(coeffs);
  add_out(coeffs, {"table", "csv", "json"});
  add_sinx(coeffs);

  auto* pot = app.add_subcommand("potential", "potential curve U(z)");
  pot->add_option("--molecule", cfg.molecule, "molecule id");
  pot->add_option("--surface", cfg.surface, "surface material id");
  pot->add_option("--z-min", cfg.z_min, "smallest distance [m]");
  pot->add_option("--z-max", cfg.z_max, "largest distance [m]");
  pot->add_option("--points", cfg.points, "grid points");
  pot->add_option("--scale", cfg.scale, "grid spacing")->check(CLI::IsMember({"log", "linear"}));
  pot->add_flag("--phonons", cfg.phonons, "include infrared (phonon) transitions");
  pot->add_option("--rel-tol", cfg.q.rel_tol, "quadrature relative tolerance");
  pot->add_option("--tail-tol", cfg.q.matsubara_tail_tol, "Matsubara tail tolerance");
  pot->add_option("--max-matsubara", cfg.q.max_matsubara, "Matsubara term budget");
  add_temps(pot);
  add_out(pot, {"csv", "json"});
  add_sinx(pot);

  auto* eps = app.add_subcommand("eps", "permittivity on the imaginary axis");
  eps->add_option("--material,--surface", cfg.surface, "material id");
  eps->add_option("--xi", cfg.xi, "imaginary frequencies [rad/s]");
  eps->add_option("--xi-min", cfg.xi_min, "grid minimum [rad/s]");
  eps->add_option("--xi-max", cfg.xi_max, "grid maximum [rad/s]");
  eps->add_option("--points", cfg.points, "grid points");
  eps->add_option("--scale", cfg.scale, "grid spacing")->check(CLI::IsMember({"log", "linear"}));
  add_out(eps, {"csv", "json"});
  add_sinx(eps);

  auto* alpha = app.add_subcommand("alpha", "molecular polarisability on the imaginary axis");
  alpha->add_option("--molecule", cfg.molecule, "molecule id");
  alpha->add_option("--xi", cfg.xi, "imaginary frequencies [rad/s]");
  alpha->add_option("--xi-min", cfg.xi_min, "grid minimum [rad/s]");
  alpha->add_option("--xi-max", cfg.xi_max, "grid maximum [rad/s]");
  alpha->add_option("--points", cfg.points, "grid points");
  alpha->add_option("--scale", cfg.scale, "grid spacing")->check(CLI::IsMember({"log", "linear"}));
  alpha->add_option("--kind", cfg.alpha_kind, "sym: (a(i xi) + a(-i xi))/2, plain: a(i xi)")
      ->check(CLI::IsMember({"sym", "plain"}));
  alpha->add_flag("--phonons", cfg.phonons, "include infrared (phonon) transitions");
  alpha->add_option("--Tm", cfg.T_m, "molecule internal temperature [K]")->check(CLI::NonNegativeNumber);
  add_out(alpha, {"csv", "json"});

  auto* fit = app.add_subcommand("fit", "fit a permittivity model to a spectrum CSV");
  fit->add_option("--input,-i", cfg.input, "CSV with omega_rad_s,re_eps,im_eps")->required();
  fit->add_option("--model", cfg.model, "model family")->check(CLI::IsMember({"oscillators", "semi-quantum"}));
  fit->add_option("--n", cfg.n, "number of oscillators")->check(CLI::PositiveNumber);
  fit->add_option("--weight", cfg.weight, "residual weighting")
      ->check(CLI::IsMember({"unweighted", "relative"}));
  fit->add_option("--init", cfg.init, "initial model (material JSON)");
  fit->add_option("--max-iterations", cfg.max_iterations, "Levenberg-Marquardt step budget")
      ->check(CLI::PositiveNumber);
  fit->add_option("--output,-o", cfg.output, "report file (default stdout)");

  auto* doctor = app.add_subcommand("doctor", "check the bundled database");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*coeffs) return cmd_coeffs(cfg);
    if (*pot) return cmd_potential(cfg);
    if (*eps) return cmd_eps(cfg);
    if (*alpha) return cmd_alpha(cfg);
    if (*fit) return cmd_fit(cfg);
    if (*doctor) return cmd_doctor();
  } catch (const UsageError& e) {
    std::cerr << "cpcalc: " << e.what() << '\n';
    return kUsage;
  } catch (const cp::Error& e) {
    std::cerr << "cpcalc: " << e.what() << '\n';
    switch (e.code()) {
      case cp::Errc::UnknownId:
      case cp::Errc::ParseError:
      case cp::Errc::DomainError:
        return kUsage;
      case cp::Errc::NonConvergence:
        return kNoConvergence;
      default:
        return kNumerical;
    }
  } catch (const std::exception& e) {
    std::cerr << "cpcalc: " << e.what() << '\n';
    return kNumerical;
  }
  return kUsage;
}
