#pragma once

#include <string>

#include "cp/dielectric.hpp"
#include "cp/molecule.hpp"

namespace cp {

struct CoeffSet {
  double C3 = 0.0;             // J m^3
  double C3_zero_width = 0.0;  // J m^3
  double C3_lrt = 0.0;         // J m^3
  double C4 = 0.0;             // J m^4
  double C3T = 0.0;            // J m^3
  double C3_phonon = 0.0;      // J m^3
};

enum class C3Mode { Symmetrised, ZeroWidth, LRT };
enum class C4Series { LargeEps, SmallChi };

// How thermally excited phonon modes enter the nonretarded phonon coefficient.
//  EffectiveStrength: each line weighted by (p0 - p1) p_0k tanh(x/2), x = hbar w / k_B T_m
//  TwoLevelSum:       sum_n p_n |d_nk|^2 over independent two-level modes
enum class PhononC3Model { EffectiveStrength, TwoLevelSum };

double c3t(double alpha0, const PermittivityModel& surf, double T);
double c3t(double alpha0, const StaticEps& eps, double T);
double c4_integral(double alpha0, const StaticEps& eps);
double c4_closed(double alpha0, double eps);
double c4_series(double alpha0, double eps, C4Series regime);
double c3_nonret(const Molecule& mol, const PermittivityModel& surf, C3Mode mode);
double c3_phonon(const Molecule& mol, double T_m,
                 PhononC3Model model = PhononC3Model::EffectiveStrength);
// Electronic lines feed C3/C4/C3T; phonon lines feed C3_phonon.
CoeffSet coeff_set(const Molecule& mol, const PermittivityModel& surf, double T, double T_m);

}  // namespace cp
