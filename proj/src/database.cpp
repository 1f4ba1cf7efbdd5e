#include "cp/database.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cp/error.hpp"

#ifndef CP_DEFAULT_DATA_DIR
#define CP_DEFAULT_DATA_DIR "data"
#endif

namespace cp {

namespace fs = std::filesystem;

namespace {

double num(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number())
    throw Error(Errc::ParseError, std::string("missing numeric field '") + key + "'");
  return j.at(key).get<double>();
}

OscillatorSet oscillators_from(const json& p, double eps_inf) {
  OscillatorSet s;
  s.eps_inf = eps_inf;
  if (p.contains("oscillators")) {
    for (const auto& o : p.at("oscillators"))
      s.oscillators.push_back({num(o, "Omega_rad_s"), num(o, "f"), num(o, "gamma_rad_s")});
  }
  std::sort(s.oscillators.begin(), s.oscillators.end(),
            [](const Oscillator& a, const Oscillator& b) { return a.Omega < b.Omega; });
  return s;
}

json oscillators_to(const OscillatorSet& s) {
  json arr = json::array();
  for (const auto& o : s.oscillators)
    arr.push_back({{"Omega_rad_s", o.Omega}, {"f", o.f}, {"gamma_rad_s", o.gamma}});
  return arr;
}

std::vector<Transition> transitions_from(const json& j, const char* key, TransitionKind kind) {
  std::vector<Transition> out;
  if (!j.contains(key)) return out;
  for (const auto& t : j.at(key)) {
    Transition tr;
    tr.omega = num(t, "omega_rad_s");
    tr.dipole = num(t, "dipole_Cm");
    tr.width = t.contains("width_rad_s") ? num(t, "width_rad_s") : 0.0;
    tr.asymmetry = t.contains("asymmetry") ? num(t, "asymmetry") : 0.0;
    tr.kind = kind;
    out.push_back(tr);
  }
  std::sort(out.begin(), out.end(),
            [](const Transition& a, const Transition& b) { return a.omega < b.omega; });
  return out;
}

json transitions_to(const std::vector<Transition>& ts) {
  json arr = json::array();
  for (const auto& t : ts) {
    json o{{"omega_rad_s", t.omega}, {"dipole_Cm", t.dipole}, {"width_rad_s", t.width}};
    if (t.asymmetry != 0.0) o["asymmetry"] = t.asymmetry;
    arr.push_back(o);
  }
  return arr;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(Errc::UnknownId, "cannot open " + p.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, p.string() + ": " + e.what());
  }
}

std::vector<std::string> stems(const fs::path& dir) {
  std::vector<std::string> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".json") out.push_back(e.path().stem().string());
  std::sort(out.begin(), out.end());
  return out;
}

bool valid_id(const std::string& id) {
  return !id.empty() && id.find('/') == std::string::npos && id.find("..") == std::string::npos;
}

}  // namespace

PermittivityModel material_from_json(const json& j) {
  try {
    std::string type = j.at("type").get<std::string>();
    const json p = j.contains("params") ? j.at("params") : json::object();
    PermittivityModel m;
    if (type == "perfect-conductor") {
      m = PerfectConductor{};
    } else if (type == "oscillators") {
      m = oscillators_from(p, p.contains("eps_inf") ? num(p, "eps_inf") : 1.0);
    } else if (type == "drude-lorentz") {
      m = DrudeLorentz{num(p, "Omega0_rad_s"), num(p, "gamma0_rad_s"), oscillators_from(p, 1.0)};
    } else if (type == "tabulated-im") {
      TabulatedImEps t{num(p, "Omega_T_rad_s"), num(p, "Omega_rad_s"), num(p, "f_rad_s"),
                       num(p, "gamma_rad_s")};
      std::string d = p.value("denominator", std::string("lorentzian"));
      if (d == "subtracted")
        t.denominator = SinxDenominator::Subtracted;
      else if (d != "lorentzian")
        throw Error(Errc::ParseError, "denominator must be 'subtracted' or 'lorentzian'");
      m = t;
    } else if (type == "semi-quantum") {
      m = SemiQuantum4{num(p, "Omega_L_rad_s"), num(p, "Omega_T_rad_s"), num(p, "gamma_L_rad_s"),
                       num(p, "gamma_T_rad_s")};
    } else {
      throw Error(Errc::ParseError, "unknown material type '" + type + "'");
    }
    validate(m);
    return m;
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, e.what());
  }
}

json material_to_json(const PermittivityModel& m) {
  json j;
  j["type"] = model_type_name(m);
  json p = json::object();
  if (const auto* d = std::get_if<DrudeLorentz>(&m)) {
    p["Omega0_rad_s"] = d->Omega0;
    p["gamma0_rad_s"] = d->gamma0;
    p["oscillators"] = oscillators_to(d->lorentz);
  } else if (const auto* s = std::get_if<OscillatorSet>(&m)) {
    p["eps_inf"] = s->eps_inf;
    p["oscillators"] = oscillators_to(*s);
  } else if (const auto* t = std::get_if<TabulatedImEps>(&m)) {
    p["Omega_T_rad_s"] = t->Omega_T;
    p["Omega_rad_s"] = t->Omega;
    p["f_rad_s"] = t->f;
    p["gamma_rad_s"] = t->gamma;
    p["denominator"] = t->denominator == SinxDenominator::Subtracted ? "subtracted" : "lorentzian";
  } else if (const auto* q = std::get_if<SemiQuantum4>(&m)) {
    p["Omega_L_rad_s"] = q->Omega_L;
    p["Omega_T_rad_s"] = q->Omega_T;
    p["gamma_L_rad_s"] = q->gamma_L;
    p["gamma_T_rad_s"] = q->gamma_T;
  }
  j["params"] = p;
  return j;
}

Molecule molecule_from_json(const json& j) {
  try {
    Molecule m;
    m.name = j.value("name", std::string());
    if (j.contains("lattice_constant_m") && !j.at("lattice_constant_m").is_null())
      m.lattice_constant = num(j, "lattice_constant_m");
    m.electronic = transitions_from(j, "electronic", TransitionKind::Electronic);
    m.phonon = transitions_from(j, "phonon", TransitionKind::Phonon);
    if (j.contains("residual_alpha_inf")) m.residual_alpha_inf = num(j, "residual_alpha_inf");
    validate(m);
    return m;
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, e.what());
  }
}

json molecule_to_json(const Molecule& m) {
  json j;
  j["name"] = m.name;
  if (m.lattice_constant) j["lattice_constant_m"] = *m.lattice_constant;
  j["electronic"] = transitions_to(m.electronic);
  j["phonon"] = transitions_to(m.phonon);
  if (m.residual_alpha_inf != 0.0) j["residual_alpha_inf"] = m.residual_alpha_inf;
  return j;
}

fs::path data_dir() {
  if (const char* env = std::getenv("CP_DATA_DIR"); env && *env) return fs::path(env);
  return fs::path(CP_DEFAULT_DATA_DIR);
}

std::vector<std::string> list_materials(const fs::path& dir) { return stems(dir / "materials"); }
std::vector<std::string> list_molecules(const fs::path& dir) { return stems(dir / "molecules"); }

PermittivityModel load_material(const std::string& id, const fs::path& dir) {
  fs::path p = dir / "materials" / (id + ".json");
  if (!valid_id(id) || !fs::exists(p)) throw Error(Errc::UnknownId, "unknown material '" + id + "'");
  return material_from_json(read_json(p));
}

Molecule load_molecule(const std::string& id, const fs::path& dir) {
  fs::path p = dir / "molecules" / (id + ".json");
  if (!valid_id(id) || !fs::exists(p)) throw Error(Errc::UnknownId, "unknown molecule '" + id + "'");
  return molecule_from_json(read_json(p));
}

json coeffs_to_json(const CoeffSet& c) {
  return {{"C3_Jm3", c.C3},   {"C3_zero_width_Jm3", c.C3_zero_width}, {"C3_lrt_Jm3", c.C3_lrt},
          {"C4_Jm4", c.C4},   {"C3T_Jm3", c.C3T},                     {"C3_phonon_Jm3", c.C3_phonon}};
}

std::string format_sci(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*e", digits - 1, v);
  return buf;
}

std::string coeff_table(const std::vector<CoeffRow>& rows) {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-20s %-10s %12s %12s %12s %12s %12s %12s\n", "surface", "molecule",
                "C3[Jm3]", "C3_G0[Jm3]", "C3_LRT[Jm3]", "C4[Jm4]", "C3T[Jm3]", "C3_ph[Jm3]");
  os << buf;
  for (const auto& r : rows) {
    const auto& c = r.coeffs;
    std::snprintf(buf, sizeof buf, "%-20s %-10s %12.4e %12.4e %12.4e %12.4e %12.4e %12.4e\n",
                  r.surface.c_str(), r.molecule.c_str(), c.C3, c.C3_zero_width, c.C3_lrt, c.C4, c.C3T,
                  c.C3_phonon);
    os << buf;
  }
  return os.str();
}

}  // namespace cp
