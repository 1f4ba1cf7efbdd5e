#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "cp/dielectric.hpp"

namespace cp {

enum class TransitionKind { Electronic, Phonon };

struct Transition {
  double omega = 0.0;   // omega_k0, rad/s
  double dipole = 0.0;  // |d_0k|, C m
  double width = 0.0;   // Gamma_k, rad/s
  TransitionKind kind = TransitionKind::Electronic;
  // Numerator slope of a partial-fraction pair relative to omega_k0 (0 for tabulated lines):
  // the term is 2 d^2 (omega_k0 - i asymmetry omega) / (3 hbar (omega_k0^2 - omega^2 - i omega Gamma/2)).
  double asymmetry = 0.0;
};

struct Molecule {
  std::string name;
  std::vector<Transition> electronic;
  std::vector<Transition> phonon;
  std::optional<double> lattice_constant;  // m
  double residual_alpha_inf = 0.0;         // C^2 m^2 / J

  // fcc film: eta = 4 / a^3
  std::optional<double> number_density() const;
  Molecule electronic_only() const;
  Molecule phonons_only() const;
};

void validate(const Molecule& m);

struct LevelScheme {
  std::vector<double> energies;  // J, ground state first
  std::vector<double> widths;    // rad/s
};

// alpha(omega) = constant + N(x)/D(x), x = -i omega / scale, real coefficients in ascending order.
struct RationalAlpha {
  std::vector<double> numerator;
  std::vector<double> denominator;
  double constant = 0.0;  // C^2 m^2 / J
  double scale = 1.0;     // rad/s

  cplx operator()(cplx omega) const;
};

struct Decomposition {
  std::vector<Transition> transitions;
  double residual_alpha_inf = 0.0;
};

RationalAlpha clausius_mosotti(const OscillatorSet& eps, double number_density);
Decomposition decompose(const RationalAlpha& alpha, TransitionKind kind = TransitionKind::Electronic);

std::vector<double> populations(const LevelScheme& scheme, double T_m);

cplx transition_term(const Transition& t, cplx omega);
// p_0k(T_m) tanh(hbar omega / (2 k_B T_m)) for a ground-state phonon line; 1 at T_m = 0.
double phonon_thermal_weight(double omega, double T_m);
// Undo the thermal weighting carried by a room-temperature film measurement.
std::vector<Transition> remove_thermal_weight(std::vector<Transition> ts, double T_m);

cplx alpha_ground(const Molecule& mol, cplx omega);
cplx alpha_thermal(const Molecule& mol, double T_m, cplx omega);
double alpha_sym(const Molecule& mol, double T_m, double xi);
// alpha_sym with all widths set to zero
double alpha_sym_zero_width(const Molecule& mol, double T_m, double xi);

}  // namespace cp
