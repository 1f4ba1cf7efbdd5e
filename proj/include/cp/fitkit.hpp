#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <vector>

#include <json.hpp>

#include "cp/dielectric.hpp"
#include "cp/error.hpp"

namespace cp {

struct SpectrumRow {
  double omega = 0.0;  // rad/s
  std::optional<double> re_eps;
  double im_eps = 0.0;
};

struct SpectrumTable {
  std::vector<SpectrumRow> rows;
  bool has_real() const;
};

void validate(const SpectrumTable& t);
SpectrumTable read_spectrum_csv(std::istream& in);
void write_spectrum_csv(std::ostream& out, const SpectrumTable& t);
SpectrumTable synthesize(const PermittivityModel& m, const std::vector<double>& omegas);

enum class Weighting { Unweighted, Relative };

struct FitOptions {
  Weighting weighting = Weighting::Unweighted;
  std::size_t max_iterations = 10000;
};

struct FitReport {
  PermittivityModel model;
  double residual_rms = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> history;  // best residual_rms so far after each accepted step, starting point first
};

class FitNonConvergence : public Error {
 public:
  explicit FitNonConvergence(FitReport r)
      : Error(Errc::NonConvergence, "fit did not converge"), report(std::move(r)) {}
  FitReport report;
};

OscillatorSet auto_init_oscillators(const SpectrumTable& data, std::size_t n);
SemiQuantum4 auto_init_semi_quantum(const SpectrumTable& data);

FitReport fit_oscillators(const SpectrumTable& data, std::size_t n,
                          const std::optional<OscillatorSet>& init = std::nullopt,
                          const FitOptions& opt = {});
FitReport fit_semi_quantum(const SpectrumTable& data,
                           const std::optional<SemiQuantum4>& init = std::nullopt,
                           const FitOptions& opt = {});

nlohmann::ordered_json fit_report_to_json(const FitReport& r);

}  // namespace cp
