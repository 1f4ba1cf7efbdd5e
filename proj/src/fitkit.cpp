#include "cp/fitkit.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <Eigen/Dense>

#include "cp/database.hpp"

namespace cp {

using Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

namespace {

// ---------------------------------------------------------------- csv

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    auto b = cell.find_first_not_of(" \t\r");
    auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  return out;
}

double parse_double(const std::string& s, std::size_t line) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(Errc::ParseError, "line " + std::to_string(line) + ": bad number '" + s + "'");
  }
}

// ---------------------------------------------------------------- least squares helpers

// Lawson-Hanson non-negative least squares.
VectorXd nnls(const MatrixXd& A, const VectorXd& b) {
  const Index n = A.cols();
  VectorXd x = VectorXd::Zero(n);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  for (int outer = 0; outer < 3 * static_cast<int>(n) + 10; ++outer) {
    VectorXd w = A.transpose() * (b - A * x);
    Index best = -1;
    double wmax = 1e-12 * (A.transpose() * b).cwiseAbs().maxCoeff();
    for (Index j = 0; j < n; ++j)
      if (!passive[static_cast<std::size_t>(j)] && w(j) > wmax) {
        wmax = w(j);
        best = j;
      }
    if (best < 0) break;
    passive[static_cast<std::size_t>(best)] = true;
    for (int inner = 0; inner < 3 * static_cast<int>(n) + 10; ++inner) {
      std::vector<Index> idx;
      for (Index j = 0; j < n; ++j)
        if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
      MatrixXd Ap(A.rows(), static_cast<Index>(idx.size()));
      for (std::size_t k = 0; k < idx.size(); ++k) Ap.col(static_cast<Index>(k)) = A.col(idx[k]);
      VectorXd zp = Ap.colPivHouseholderQr().solve(b);
      VectorXd z = VectorXd::Zero(n);
      for (std::size_t k = 0; k < idx.size(); ++k) z(idx[k]) = zp(static_cast<Index>(k));
      bool feasible = true;
      for (Index j : idx)
        if (z(j) <= 0) feasible = false;
      if (feasible) {
        x = z;
        break;
      }
      double alpha = 1.0;
      for (Index j : idx)
        if (z(j) <= 0) alpha = std::min(alpha, x(j) / (x(j) - z(j)));
      x += alpha * (z - x);
      for (Index j : idx)
        if (x(j) <= 1e-300) {
          passive[static_cast<std::size_t>(j)] = false;
          x(j) = 0.0;
        }
    }
  }
  return x;
}

VectorXd scaled_lstsq(MatrixXd A, const VectorXd& b) {
  VectorXd scale = A.colwise().norm().transpose();
  for (Index j = 0; j < scale.size(); ++j)
    if (scale(j) == 0.0) scale(j) = 1.0;
  for (Index j = 0; j < A.cols(); ++j) A.col(j) /= scale(j);
  VectorXd x = A.completeOrthogonalDecomposition().solve(b);
  return x.cwiseQuotient(scale);
}

// ---------------------------------------------------------------- Levenberg-Marquardt

struct LMResult {
  VectorXd p;
  double F = 0.0;
  std::size_t accepted = 0;
  bool converged = false;
  bool exact = false;  // stopped at the rounding floor
  std::vector<double> history;
};

// eval(p, r, J) fills residuals and (if J != nullptr) the Jacobian; returns false on non-finite output.
// Residual norms at or below `floor` count as an exact fit.
template <class Eval>
LMResult levenberg_marquardt(Eval&& eval, VectorXd p, std::size_t m, std::size_t max_iter, double floor) {
  LMResult out;
  VectorXd r(static_cast<Index>(m));
  MatrixXd J(static_cast<Index>(m), p.size());
  if (!eval(p, r, &J)) throw Error(Errc::NonConvergence, "initial parameters give non-finite residuals");
  double F = r.squaredNorm();
  auto rms = [m](double f) { return std::sqrt(f / static_cast<double>(m)); };
  out.history.push_back(rms(F));
  double lambda = 1e-3;
  VectorXd dscale = VectorXd::Zero(p.size());
  VectorXd rq(static_cast<Index>(m));
  for (std::size_t attempt = 0; attempt < max_iter; ++attempt) {
    VectorXd g = J.transpose() * r;
    double rn = std::sqrt(F);
    double gs = 0.0;
    for (Index k = 0; k < g.size(); ++k) {
      double cn = J.col(k).norm();
      if (cn > 0.0 && rn > 0.0) gs = std::max(gs, std::fabs(g(k)) / (cn * rn));
    }
    if (rn <= floor || gs < 1e-10) {
      out.converged = true;
      out.exact = rn <= floor;
      break;
    }
    // damped step from QR of [J; sqrt(lambda) D] to avoid squaring the condition number;
    // D keeps the largest column norms seen so far so a column that collapses stays damped
    dscale = dscale.cwiseMax(J.colwise().norm().transpose());
    VectorXd d = dscale.array() + 1e-9 * dscale.maxCoeff();
    const Index np = p.size();
    MatrixXd aug(static_cast<Index>(m) + np, np);
    aug.topRows(static_cast<Index>(m)) = J;
    aug.bottomRows(np) = (std::sqrt(lambda) * d).asDiagonal();
    VectorXd rhs = VectorXd::Zero(static_cast<Index>(m) + np);
    rhs.head(static_cast<Index>(m)) = -r;
    VectorXd step = aug.householderQr().solve(rhs);
    double smax = step.cwiseAbs().maxCoeff();
    // parameters are logarithms; cap each component at a factor e^2
    step = step.cwiseMax(-2.0).cwiseMin(2.0);
    VectorXd q = p + step;
    bool ok = step.allFinite() && eval(q, rq, nullptr);
    double Fq = ok ? rq.squaredNorm() : INFINITY;
    MatrixXd Jq(J.rows(), J.cols());
    if (ok && Fq < F && eval(q, rq, &Jq)) {
      bool stalled = F - Fq <= 1e-10 * F;
      p = q;
      F = Fq;
      r = rq;
      J = std::move(Jq);
      lambda = std::max(lambda / 10.0, 1e-12);
      ++out.accepted;
      out.history.push_back(rms(F));
      if (stalled) {
        out.converged = true;
        break;
      }
    } else {
      lambda *= 10.0;
      if (lambda > 1e40) break;
    }
    if (smax < 1e-12) {
      out.converged = true;
      break;
    }
  }
  out.p = p;
  out.F = F;
  return out;
}

struct Prepared {
  std::vector<double> w;
  std::vector<cplx> data;
  std::vector<double> weight;
};

Prepared prepare(const SpectrumTable& t, Weighting wt) {
  Prepared p;
  for (const auto& row : t.rows) {
    cplx d(row.re_eps.value_or(0.0), row.im_eps);
    p.w.push_back(row.omega);
    p.data.push_back(d);
    p.weight.push_back(wt == Weighting::Relative ? std::max(std::abs(d), 1e-300) : 1.0);
  }
  return p;
}

double rounding_floor(const Prepared& d) {
  double n2 = 0.0;
  for (std::size_t i = 0; i < d.w.size(); ++i) n2 += std::norm(d.data[i] / d.weight[i]);
  return 1e-13 * std::sqrt(n2);
}

// exp of every log parameter, and its square, stays finite and nonzero
bool representable(const VectorXd& p) {
  return (p.array().abs() < 150.0).all();
}

// ---------------------------------------------------------------- oscillator model

OscillatorSet unpack_osc(const VectorXd& p) {
  OscillatorSet s;
  s.eps_inf = 1.0 + std::exp(p(0));
  for (Index k = 1; k + 2 < p.size(); k += 3)
    s.oscillators.push_back({std::exp(p(k)), std::exp(p(k + 1)), std::exp(p(k + 2))});
  std::sort(s.oscillators.begin(), s.oscillators.end(),
            [](const Oscillator& a, const Oscillator& b) { return a.Omega < b.Omega; });
  return s;
}

VectorXd pack_osc(const OscillatorSet& s) {
  VectorXd p(1 + 3 * static_cast<Index>(s.oscillators.size()));
  p(0) = std::log(std::max(s.eps_inf - 1.0, 1e-9));
  Index k = 1;
  for (const auto& o : s.oscillators) {
    p(k++) = std::log(o.Omega);
    p(k++) = std::log(o.f);
    p(k++) = std::log(o.gamma);
  }
  return p;
}

std::vector<cplx> vf_poles(const Prepared& d, std::vector<cplx> poles, double S) {
  const Index N = static_cast<Index>(d.w.size());
  const Index n = static_cast<Index>(poles.size());
  VectorXcd s(N), f(N);
  for (Index i = 0; i < N; ++i) {
    s(i) = cplx(0.0, -d.w[static_cast<std::size_t>(i)] / S);
    f(i) = d.data[static_cast<std::size_t>(i)];
  }
  const cplx I(0.0, 1.0);
  double fnorm = f.norm();
  for (int it = 0; it < 40; ++it) {
    MatrixXcd Phi(N, 2 * n);
    for (Index k = 0; k < n; ++k) {
      cplx a = poles[static_cast<std::size_t>(k)];
      for (Index i = 0; i < N; ++i) {
        cplx u = 1.0 / (s(i) - a), v = 1.0 / (s(i) - std::conj(a));
        Phi(i, 2 * k) = u + v;
        Phi(i, 2 * k + 1) = I * u - I * v;
      }
    }
    const Index nu = 2 + 4 * n;
    MatrixXcd M(N, nu);
    M.col(0).setOnes();
    M.block(0, 1, N, 2 * n) = Phi;
    M.col(1 + 2 * n) = -f;
    for (Index j = 0; j < 2 * n; ++j) M.col(2 + 2 * n + j) = -f.cwiseProduct(Phi.col(j));
    MatrixXd A(2 * N + 1, nu);
    A.topRows(N) = M.real();
    A.middleRows(N, N) = M.imag();
    VectorXd b = VectorXd::Zero(2 * N + 1);
    double wgt = fnorm / static_cast<double>(N);
    A.row(2 * N).setZero();
    A(2 * N, 1 + 2 * n) = wgt * static_cast<double>(N);
    for (Index j = 0; j < 2 * n; ++j) A(2 * N, 2 + 2 * n + j) = wgt * Phi.col(j).real().sum();
    b(2 * N) = wgt * static_cast<double>(N);
    VectorXd x = scaled_lstsq(A, b);
    double dt = x(1 + 2 * n);
    if (std::fabs(dt) < 1e-8) dt = dt < 0 ? -1e-8 : 1e-8;
    VectorXd ct = x.segment(2 + 2 * n, 2 * n);

    MatrixXd Am = MatrixXd::Zero(2 * n, 2 * n);
    VectorXd bv = VectorXd::Zero(2 * n);
    for (Index k = 0; k < n; ++k) {
      cplx a = poles[static_cast<std::size_t>(k)];
      Am(2 * k, 2 * k) = a.real();
      Am(2 * k, 2 * k + 1) = a.imag();
      Am(2 * k + 1, 2 * k) = -a.imag();
      Am(2 * k + 1, 2 * k + 1) = a.real();
      bv(2 * k) = 2.0;
    }
    Eigen::EigenSolver<MatrixXd> es(Am - bv * ct.transpose() / dt, false);
    std::vector<cplx> zc;
    std::vector<double> zr;
    for (Index i = 0; i < es.eigenvalues().size(); ++i) {
      cplx z = es.eigenvalues()(i);
      if (z.real() > 0) z = -std::conj(z);
      if (z.imag() > 1e-12)
        zc.push_back(z);
      else if (std::fabs(z.imag()) <= 1e-12)
        zr.push_back(z.real());
    }
    std::sort(zr.begin(), zr.end());
    for (std::size_t k = 0; zc.size() < poles.size() && k + 1 < zr.size(); k += 2)
      zc.push_back(cplx((zr[k] + zr[k + 1]) / 2, std::fabs(zr[k] - zr[k + 1]) / 2 + 1e-3));
    if (zc.size() < poles.size()) break;
    std::sort(zc.begin(), zc.end(), [](cplx a, cplx b) { return std::abs(a) < std::abs(b); });
    zc.resize(poles.size());
    double change = 0.0;
    for (std::size_t k = 0; k < zc.size(); ++k)
      change = std::max(change, std::abs(zc[k] - poles[k]) / std::abs(zc[k]));
    poles = zc;
    if (change < 1e-13) break;
  }
  return poles;
}

OscillatorSet strengths_for(const Prepared& d, const std::vector<std::pair<double, double>>& og) {
  const Index N = static_cast<Index>(d.w.size());
  const Index n = static_cast<Index>(og.size());
  MatrixXd A(2 * N, n + 1);
  VectorXd b(2 * N);
  for (Index i = 0; i < N; ++i) {
    double w = d.w[static_cast<std::size_t>(i)];
    A(i, 0) = 1.0;
    A(N + i, 0) = 0.0;
    for (Index k = 0; k < n; ++k) {
      auto [O, g] = og[static_cast<std::size_t>(k)];
      cplx v = O * O / cplx(O * O - w * w, -g * w);
      A(i, k + 1) = v.real();
      A(N + i, k + 1) = v.imag();
    }
    b(i) = d.data[static_cast<std::size_t>(i)].real();
    b(N + i) = d.data[static_cast<std::size_t>(i)].imag();
  }
  VectorXd x = nnls(A, b);
  OscillatorSet s;
  s.eps_inf = std::max(x(0), 1.0 + 1e-6);
  double fmax = std::max(x.tail(n).maxCoeff(), 1e-12);
  for (Index k = 0; k < n; ++k)
    s.oscillators.push_back({og[static_cast<std::size_t>(k)].first,
                             std::max(x(k + 1), 1e-6 * fmax), og[static_cast<std::size_t>(k)].second});
  std::sort(s.oscillators.begin(), s.oscillators.end(),
            [](const Oscillator& a, const Oscillator& b) { return a.Omega < b.Omega; });
  return s;
}

double full_width_half_max(const SpectrumTable& t, std::size_t j) {
  const auto& r = t.rows;
  double half = r[j].im_eps / 2;
  auto cross = [&](std::size_t a, std::size_t b) {
    double ya = r[a].im_eps, yb = r[b].im_eps;
    double u = (ya - half) / (ya - yb);
    return r[a].omega + u * (r[b].omega - r[a].omega);
  };
  std::size_t lo = j, hi = j;
  while (lo > 0 && r[lo].im_eps > half) --lo;
  while (hi + 1 < r.size() && r[hi].im_eps > half) ++hi;
  double wl = r[lo].im_eps <= half ? cross(lo + 1, lo) : r[lo].omega;
  double wh = r[hi].im_eps <= half ? cross(hi - 1, hi) : r[hi].omega;
  return std::max(wh - wl, 0.02 * r[j].omega);
}

void check_rows(const SpectrumTable& t, std::size_t need, bool need_real) {
  validate(t);
  if (t.rows.size() < need)
    throw Error(Errc::InsufficientData, "need at least " + std::to_string(need) + " rows");
  if (need_real && !t.has_real()) throw Error(Errc::InsufficientData, "re_eps column required");
}

FitReport finish(PermittivityModel m, const LMResult& lm, std::size_t rows) {
  FitReport rep;
  rep.model = std::move(m);
  rep.residual_rms = std::sqrt(lm.F / static_cast<double>(2 * rows));
  rep.iterations = lm.accepted;
  rep.converged = lm.converged;
  rep.history = lm.history;
  if (!rep.converged) throw FitNonConvergence(rep);
  return rep;
}

}  // namespace

bool SpectrumTable::has_real() const {
  return !rows.empty() &&
         std::all_of(rows.begin(), rows.end(), [](const SpectrumRow& r) { return r.re_eps.has_value(); });
}

void validate(const SpectrumTable& t) {
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    if (!(std::isfinite(r.omega) && r.omega > 0))
      throw Error(Errc::DomainError, "omega must be finite and positive");
    if (i > 0 && !(t.rows[i - 1].omega < r.omega))
      throw Error(Errc::DomainError, "omega must be strictly ascending");
    if (!(std::isfinite(r.im_eps) && r.im_eps >= 0)) throw Error(Errc::DomainError, "im_eps must be >= 0");
    if (r.re_eps && !std::isfinite(*r.re_eps)) throw Error(Errc::DomainError, "re_eps not finite");
  }
}

SpectrumTable read_spectrum_csv(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    header = split_csv(line);
    break;
  }
  auto col = [&](const char* name) -> long {
    auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<long>(it - header.begin());
  };
  long cw = col("omega_rad_s"), cr = col("re_eps"), ci = col("im_eps");
  if (cw < 0 || ci < 0) throw Error(Errc::ParseError, "header must contain omega_rad_s and im_eps");
  SpectrumTable t;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    auto cells = split_csv(line);
    if (cells.size() != header.size())
      throw Error(Errc::ParseError, "line " + std::to_string(lineno) + ": wrong number of columns");
    SpectrumRow r;
    r.omega = parse_double(cells[static_cast<std::size_t>(cw)], lineno);
    r.im_eps = parse_double(cells[static_cast<std::size_t>(ci)], lineno);
    if (cr >= 0) r.re_eps = parse_double(cells[static_cast<std::size_t>(cr)], lineno);
    t.rows.push_back(r);
  }
  try {
    validate(t);
  } catch (const Error& e) {
    throw Error(Errc::ParseError, e.what());
  }
  return t;
}

void write_spectrum_csv(std::ostream& out, const SpectrumTable& t) {
  bool re = t.has_real();
  out << (re ? "omega_rad_s,re_eps,im_eps\n" : "omega_rad_s,im_eps\n");
  for (const auto& r : t.rows) {
    out << format_sci(r.omega, 17) << ',';
    if (re) out << format_sci(*r.re_eps, 17) << ',';
    out << format_sci(r.im_eps, 17) << '\n';
  }
}

SpectrumTable synthesize(const PermittivityModel& m, const std::vector<double>& omegas) {
  SpectrumTable t;
  for (double w : omegas) {
    SpectrumRow r;
    r.omega = w;
    if (const auto* tab = std::get_if<TabulatedImEps>(&m)) {
      r.im_eps = tab->im_eps(w);
    } else {
      cplx e = eval_eps_real(m, w);
      r.re_eps = e.real();
      r.im_eps = e.imag();
    }
    t.rows.push_back(r);
  }
  return t;
}

OscillatorSet auto_init_oscillators(const SpectrumTable& data, std::size_t n) {
  check_rows(data, 3 * n + 1, true);
  const auto& r = data.rows;
  Prepared d = prepare(data, Weighting::Unweighted);
  std::vector<double> ws = d.w;
  std::nth_element(ws.begin(), ws.begin() + static_cast<long>(ws.size() / 2), ws.end());
  const double S = ws[ws.size() / 2];

  // seeds: strongest local maxima of Im eps
  std::vector<std::size_t> peaks;
  for (std::size_t i = 1; i + 1 < r.size(); ++i)
    if (r[i].im_eps > r[i - 1].im_eps && r[i].im_eps >= r[i + 1].im_eps) peaks.push_back(i);
  std::sort(peaks.begin(), peaks.end(),
            [&](std::size_t a, std::size_t b) { return r[a].im_eps > r[b].im_eps; });
  if (peaks.size() > n) peaks.resize(n);
  std::vector<std::pair<double, double>> og;
  for (auto i : peaks) og.push_back({r[i].omega, full_width_half_max(data, i)});

  // remaining poles at quantiles of the absorption weight over ln(omega)
  std::size_t rest = n - og.size();
  if (rest > 0) {
    std::vector<double> cum(r.size(), 0.0);
    for (std::size_t i = 1; i < r.size(); ++i)
      cum[i] = cum[i - 1] + 0.5 * (r[i].im_eps + r[i - 1].im_eps) * std::log(r[i].omega / r[i - 1].omega);
    double total = cum.back();
    for (std::size_t k = 0; k < rest; ++k) {
      double target = (static_cast<double>(k) + 0.5) / static_cast<double>(rest) * total;
      double w = r.back().omega;
      if (total > 0.0) {
        auto it = std::lower_bound(cum.begin(), cum.end(), target);
        std::size_t i = static_cast<std::size_t>(std::max<long>(1, it - cum.begin()));
        if (i >= cum.size()) i = cum.size() - 1;
        double u = (target - cum[i - 1]) / std::max(cum[i] - cum[i - 1], 1e-300);
        w = std::exp(std::log(r[i - 1].omega) + u * std::log(r[i].omega / r[i - 1].omega));
      } else {
        w = std::exp(std::log(r.front().omega) +
                     (static_cast<double>(k) + 0.5) / static_cast<double>(rest) *
                         std::log(r.back().omega / r.front().omega));
      }
      og.push_back({w, 0.1 * w});
    }
  }

  std::vector<cplx> poles;
  for (auto [O, g] : og) {
    double h = g / 2;
    poles.push_back(cplx(-h, std::sqrt(std::max(O * O - h * h, 0.01 * O * O))) / S);
  }
  poles = vf_poles(d, poles, S);
  og.clear();
  for (auto a : poles) og.push_back({std::abs(a) * S, -2.0 * a.real() * S});
  return strengths_for(d, og);
}

FitReport fit_oscillators(const SpectrumTable& data, std::size_t n, const std::optional<OscillatorSet>& init,
                          const FitOptions& opt) {
  if (n < 1) throw Error(Errc::InsufficientData, "need at least one oscillator");
  check_rows(data, 3 * n + 1, true);
  OscillatorSet start = init ? *init : auto_init_oscillators(data, n);
  if (start.oscillators.size() != n)
    throw Error(Errc::DomainError, "initial model must have n oscillators");
  Prepared d = prepare(data, opt.weighting);
  const std::size_t N = d.w.size();
  auto eval = [&](const VectorXd& p, VectorXd& r, MatrixXd* J) {
    if (!representable(p)) return false;
    const cplx I(0.0, 1.0);
    double einf = 1.0 + std::exp(p(0));
    for (std::size_t i = 0; i < N; ++i) {
      double w = d.w[i];
      cplx e = einf;
      for (Index k = 1; k + 2 < p.size(); k += 3) {
        double O = std::exp(p(k)), f = std::exp(p(k + 1)), g = std::exp(p(k + 2));
        cplx D = O * O - w * w - I * g * w;
        cplx T = f * O * O / D;
        e += T;
        if (J) {
          cplx dO = 2.0 * f * O * O * (-w * w - I * g * w) / (D * D);
          cplx dg = g * f * O * O * I * w / (D * D);
          (*J)(static_cast<Index>(i), k) = dO.real() / d.weight[i];
          (*J)(static_cast<Index>(N + i), k) = dO.imag() / d.weight[i];
          (*J)(static_cast<Index>(i), k + 1) = T.real() / d.weight[i];
          (*J)(static_cast<Index>(N + i), k + 1) = T.imag() / d.weight[i];
          (*J)(static_cast<Index>(i), k + 2) = dg.real() / d.weight[i];
          (*J)(static_cast<Index>(N + i), k + 2) = dg.imag() / d.weight[i];
        }
      }
      if (J) {
        (*J)(static_cast<Index>(i), 0) = std::exp(p(0)) / d.weight[i];
        (*J)(static_cast<Index>(N + i), 0) = 0.0;
      }
      cplx res = (e - d.data[i]) / d.weight[i];
      r(static_cast<Index>(i)) = res.real();
      r(static_cast<Index>(N + i)) = res.imag();
    }
    return r.allFinite() && (!J || J->allFinite());
  };
  const double floor = rounding_floor(d);
  auto lm = levenberg_marquardt(eval, pack_osc(start), 2 * N, opt.max_iterations, floor);
  if (!init) {
    // Move one of the weakest oscillators to where the model under-absorbs most, keeping the best move that helps.
    for (std::size_t round = 0; round < n && lm.converged && !lm.exact; ++round) {
      OscillatorSet cur = unpack_osc(lm.p);
      VectorXd r(static_cast<Index>(2 * N));
      eval(lm.p, r, nullptr);
      const std::size_t half = std::max<std::size_t>(1, N / 100);
      std::vector<double> deficit(N);
      for (std::size_t i = 0; i < N; ++i) {
        std::size_t lo = i > half ? i - half : 0, hi = std::min(N - 1, i + half);
        double sum = 0.0;
        for (std::size_t j = lo; j <= hi; ++j) sum -= r(static_cast<Index>(N + j)) * d.weight[j];
        deficit[i] = sum / static_cast<double>(hi - lo + 1);
      }
      std::vector<std::size_t> peaks;
      for (std::size_t i = 0; i < N; ++i) {
        bool top = deficit[i] > 0.0 && (i == 0 || deficit[i] >= deficit[i - 1]) &&
                   (i + 1 == N || deficit[i] >= deficit[i + 1]);
        if (top) peaks.push_back(i);
      }
      std::sort(peaks.begin(), peaks.end(), [&](std::size_t x, std::size_t y) { return deficit[x] > deficit[y]; });
      std::vector<std::size_t> seeds;
      for (auto i : peaks) {
        bool apart = std::all_of(seeds.begin(), seeds.end(),
                                 [&](std::size_t j) { return std::fabs(std::log(d.w[i] / d.w[j])) > 0.1; });
        if (apart) seeds.push_back(i);
        if (seeds.size() == 3) break;
      }
      std::vector<std::size_t> order(n);
      for (std::size_t k = 0; k < n; ++k) order[k] = k;
      // absorption each oscillator contributes inside the measured band
      std::vector<double> band(n, 0.0);
      for (std::size_t k = 0; k < n; ++k) {
        const auto& o = cur.oscillators[k];
        for (std::size_t i = 1; i < N; ++i) {
          double w = d.w[i];
          double im = o.f * o.Omega * o.Omega * o.gamma * w /
                      (std::pow(o.Omega * o.Omega - w * w, 2) + std::pow(o.gamma * w, 2));
          band[k] += im * std::log(w / d.w[i - 1]);
        }
      }
      std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return band[x] < band[y]; });
      order.resize(std::min<std::size_t>(n, 3));
      std::optional<LMResult> best;
      for (auto at : seeds)
        for (auto k : order) {
          OscillatorSet moved = cur;
          moved.oscillators[k] = {d.w[at], 0.1 * deficit[at], 0.1 * d.w[at]};
          auto trial = levenberg_marquardt(eval, pack_osc(moved), 2 * N, opt.max_iterations, floor);
          if (trial.converged && trial.F < (1.0 - 1e-6) * lm.F && (!best || trial.F < best->F)) best = std::move(trial);
        }
      if (!best) break;
      best->accepted += lm.accepted;
      std::vector<double> h = lm.history;
      for (double v : best->history) h.push_back(std::min(v, h.back()));
      best->history = std::move(h);
      lm = std::move(*best);
    }
  }
  OscillatorSet s = unpack_osc(lm.p);
  validate(PermittivityModel{s});
  return finish(s, lm, N);
}

SemiQuantum4 auto_init_semi_quantum(const SpectrumTable& data) {
  check_rows(data, 5, true);
  Prepared d = prepare(data, Weighting::Unweighted);
  const Index N = static_cast<Index>(d.w.size());
  // eps (WT^2 - w^2 - i w gT) = WL^2 - w^2 - i w gL, linear in (WT^2, gT, WL^2, gL)
  MatrixXd A(2 * N, 4);
  VectorXd b(2 * N);
  const cplx I(0.0, 1.0);
  for (Index i = 0; i < N; ++i) {
    double w = d.w[static_cast<std::size_t>(i)];
    cplx e = d.data[static_cast<std::size_t>(i)];
    cplx c0 = e, c1 = -I * w * e, c2 = -1.0, c3 = I * w;
    cplx rhs = (e - 1.0) * w * w;
    A.row(i) << c0.real(), c1.real(), c2.real(), c3.real();
    A.row(N + i) << c0.imag(), c1.imag(), c2.imag(), c3.imag();
    b(i) = rhs.real();
    b(N + i) = rhs.imag();
  }
  VectorXd x = scaled_lstsq(A, b);
  auto pos = [](double v, double fallback) { return v > 0 ? v : fallback; };
  SemiQuantum4 q;
  double wmid = d.w[d.w.size() / 2];
  q.Omega_T = std::sqrt(pos(x(0), wmid * wmid));
  q.gamma_T = pos(x(1), 0.1 * q.Omega_T);
  q.Omega_L = std::sqrt(pos(x(2), 2.0 * q.Omega_T * q.Omega_T));
  q.gamma_L = pos(x(3), 0.1 * q.Omega_L);
  return q;
}

FitReport fit_semi_quantum(const SpectrumTable& data, const std::optional<SemiQuantum4>& init,
                           const FitOptions& opt) {
  check_rows(data, 5, true);
  SemiQuantum4 start = init ? *init : auto_init_semi_quantum(data);
  Prepared d = prepare(data, opt.weighting);
  const std::size_t N = d.w.size();
  auto eval = [&](const VectorXd& p, VectorXd& r, MatrixXd* J) {
    if (!representable(p)) return false;
    const cplx I(0.0, 1.0);
    double L = std::exp(p(0)), T = std::exp(p(1)), gL = std::exp(p(2)), gT = std::exp(p(3));
    for (std::size_t i = 0; i < N; ++i) {
      double w = d.w[i];
      cplx Nn = L * L - w * w - I * w * gL;
      cplx D = T * T - w * w - I * w * gT;
      cplx e = Nn / D;
      if (J) {
        cplx der[4] = {2.0 * L * L / D, -Nn * 2.0 * T * T / (D * D), -I * w * gL / D,
                       Nn * I * w * gT / (D * D)};
        for (Index k = 0; k < 4; ++k) {
          (*J)(static_cast<Index>(i), k) = der[k].real() / d.weight[i];
          (*J)(static_cast<Index>(N + i), k) = der[k].imag() / d.weight[i];
        }
      }
      cplx res = (e - d.data[i]) / d.weight[i];
      r(static_cast<Index>(i)) = res.real();
      r(static_cast<Index>(N + i)) = res.imag();
    }
    return r.allFinite() && (!J || J->allFinite());
  };
  VectorXd p0(4);
  p0 << std::log(start.Omega_L), std::log(start.Omega_T), std::log(start.gamma_L), std::log(start.gamma_T);
  auto lm = levenberg_marquardt(eval, p0, 2 * N, opt.max_iterations, rounding_floor(d));
  SemiQuantum4 q{std::exp(lm.p(0)), std::exp(lm.p(1)), std::exp(lm.p(2)), std::exp(lm.p(3))};
  validate(PermittivityModel{q});
  return finish(q, lm, N);
}

nlohmann::ordered_json fit_report_to_json(const FitReport& r) {
  nlohmann::ordered_json j;
  j["model"] = material_to_json(r.model);
  j["residual_rms"] = r.residual_rms;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  return j;
}

}  // namespace cp
