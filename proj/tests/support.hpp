#pragma once
#include <cmath>
#include <string>

#include <doctest.h>

#include "cp/database.hpp"

namespace cptest {

inline double rel_err(double a, double b) {
  if (a == b) return 0.0;
  return std::fabs(a - b) / std::max(std::fabs(a), std::fabs(b));
}

#define CHECK_REL(a, b, tol)                                                            \
  do {                                                                                  \
    double cp_a_ = (a), cp_b_ = (b);                                                    \
    INFO(#a " = " << cp_a_ << ", " #b " = " << cp_b_ << ", rel = " << cptest::rel_err(cp_a_, cp_b_)); \
    CHECK(cptest::rel_err(cp_a_, cp_b_) <= (tol));                                      \
  } while (0)

inline cp::PermittivityModel mat(const std::string& id) { return cp::load_material(id); }
inline cp::Molecule mol(const std::string& id) { return cp::load_molecule(id); }

template <class T>
T mat_as(const std::string& id) {
  return std::get<T>(cp::load_material(id));
}

}  // namespace cptest
