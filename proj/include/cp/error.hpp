#pragma once

#include <stdexcept>
#include <string>

namespace cp {

enum class Errc {
  DomainError,
  PerfectConductorHasNoEps,
  RealPartUnavailable,
  StaticDrudeDivergence,
  DecompositionFailure,
  QuadratureFailure,
  MatsubaraBudgetExceeded,
  NonConvergence,
  InsufficientData,
  ParseError,
  UnknownId,
};

const char* errc_name(Errc e);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace cp
