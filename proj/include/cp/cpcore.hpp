#pragma once

#include <cstddef>
#include <vector>

#include "cp/dielectric.hpp"
#include "cp/molecule.hpp"
#include "cp/numeric.hpp"

namespace cp {

struct EnvConfig {
  double T = 300.0;    // environment, K
  double T_m = 300.0;  // molecule, K
  double z = 1e-9;     // m
};

struct QuadratureSettings {
  double rel_tol = 1e-8;
  double matsubara_tail_tol = 1e-10;
  std::size_t max_matsubara = 1000000;
  std::size_t max_subdivisions = 10000;
};

struct PotentialResult {
  double total = 0.0;        // J
  double nonresonant = 0.0;  // J
  double resonant = 0.0;     // J
  std::size_t matsubara_terms_used = 0;
  double est_error = 0.0;  // J
};

struct SumResult {
  double value = 0.0;
  std::size_t terms = 0;
  double est_error = 0.0;
};

// Per-Matsubara-frequency molecule and surface data, shared across distances.
class MatsubaraTable {
 public:
  MatsubaraTable(const Molecule& mol, const PermittivityModel& surf, double T, double T_m);
  double xi(std::size_t j) const;
  double alpha(std::size_t j);
  double eps(std::size_t j);  // unused (NaN) for a perfect conductor
  bool perfect() const { return perfect_; }
  double static_reflection() const { return r0_; }
  double temperature() const { return T_; }

 private:
  void grow(std::size_t j);
  const Molecule& mol_;
  const PermittivityModel& surf_;
  double T_, T_m_;
  bool perfect_;
  double r0_;
  std::vector<double> alpha_, eps_;
};

double n_thermal(double omega, double T);

SumResult nonresonant_sum(MatsubaraTable& table, double z, const QuadratureSettings& q);
double u_nonresonant(const Molecule& mol, const PermittivityModel& surf, const EnvConfig& env,
                     const QuadratureSettings& q = {});
QuadResult zero_temperature_integral(const Molecule& mol, const PermittivityModel& surf, double z,
                                     const QuadratureSettings& q, double T_m = 0.0);
double u_zero_temperature(const Molecule& mol, const PermittivityModel& surf, double z,
                          const QuadratureSettings& q = {}, double T_m = 0.0);
double u_resonant(const Molecule& mol, const PermittivityModel& surf, const EnvConfig& env,
                  const QuadratureSettings& q = {});
PotentialResult u_total(const Molecule& mol, const PermittivityModel& surf, const EnvConfig& env,
                        const QuadratureSettings& q = {});
// Same as u_total over a distance grid, reusing imaginary-axis data between points.
std::vector<PotentialResult> u_total_curve(const Molecule& mol, const PermittivityModel& surf,
                                           double T, double T_m, const std::vector<double>& zs,
                                           const QuadratureSettings& q = {});

// Whether u_total replaces the Matsubara sum by the T = 0 integral.
bool use_zero_temperature_limit(const Molecule& mol, const PermittivityModel& surf, double T, double z);

}  // namespace cp
