#include "branchlab/cosmo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "branchlab/error.hpp"

namespace branchlab {

namespace {

constexpr double kTailBound = 1e-10;
constexpr std::size_t kMaxIntervals = std::size_t{1} << 22;

void validate(const BranchHistory& h) {
  if (h.form == BranchHistory::Form::Exponential) {
    if (!(h.A > 0.0)) throw Error(ErrorCode::InvalidArgument, "family '" + h.name + "': A must be positive");
    if (h.n0 < 0.0) throw Error(ErrorCode::InvalidDensity, "family '" + h.name + "': negative observer density");
    if (!std::isfinite(h.gamma) || !std::isfinite(h.omega) || !std::isfinite(h.t0))
      throw Error(ErrorCode::InvalidArgument, "family '" + h.name + "': parameters must be finite");
    if (!(h.t1 >= h.t0)) throw Error(ErrorCode::InvalidArgument, "family '" + h.name + "': t1 < t0");
    return;
  }
  const std::size_t n = h.ts.size();
  if (n < 2 || h.alphas.size() != n || h.ns.size() != n)
    throw Error(ErrorCode::InvalidArgument, "family '" + h.name + "': need >= 2 samples of t, alpha and n");
  for (std::size_t i = 0; i < n; ++i) {
    if (i && !(h.ts[i] > h.ts[i - 1]))
      throw Error(ErrorCode::InvalidArgument, "family '" + h.name + "': sample times must increase");
    if (h.ns[i] < 0.0 || h.alphas[i] < 0.0)
      throw Error(ErrorCode::InvalidDensity, "family '" + h.name + "': negative sample at t=" + std::to_string(h.ts[i]));
  }
}

double integrand(const BranchHistory& h, double t) {
  return h.A * h.A * h.n0 * std::exp((h.omega - 2.0 * h.gamma) * t);
}

bool analytically_divergent(const BranchHistory& h) {
  return std::isinf(h.t1) && h.n0 > 0.0 && !(2.0 * h.gamma > h.omega);
}

double simpson(const BranchHistory& h, double a, double b, std::size_t n) {
  const double step = (b - a) / static_cast<double>(n);
  double odd = 0.0;
  double even = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    const double v = integrand(h, a + step * static_cast<double>(i));
    (i % 2 ? odd : even) += v;
  }
  return step / 3.0 * (integrand(h, a) + integrand(h, b) + 4.0 * odd + 2.0 * even);
}

// Upper limit where the analytic tail drops below kTailBound.
double horizon(const BranchHistory& h) {
  if (std::isfinite(h.t1)) return h.t1;
  const double rate = 2.0 * h.gamma - h.omega;
  const double scale = h.A * h.A * h.n0 / rate;
  if (scale <= kTailBound) return h.t0 + 1.0;
  return std::max(h.t0 + 1.0, std::log(scale / kTailBound) / rate);
}

double tail(const BranchHistory& h, double at) {
  if (std::isfinite(h.t1)) return 0.0;
  const double rate = 2.0 * h.gamma - h.omega;
  return h.A * h.A * h.n0 * std::exp(-rate * at) / rate;
}

double trapezoid(std::span<const double> t, std::span<const double> f, std::size_t stride) {
  double s = 0.0;
  std::size_t i = 0;
  for (; i + stride < t.size(); i += stride) s += 0.5 * (t[i + stride] - t[i]) * (f[i] + f[i + stride]);
  if (i + 1 < t.size()) return std::numeric_limits<double>::quiet_NaN();
  return s;
}

}  // namespace

MeasureResult branch_measure(const BranchHistory& h) {
  validate(h);
  if (h.form == BranchHistory::Form::Tabulated) {
    const std::size_t n = h.ts.size();
    std::vector<double> f(n);
    for (std::size_t i = 0; i < n; ++i) f[i] = h.alphas[i] * h.alphas[i] * h.ns[i];
    const double trap = trapezoid(h.ts, f, 1);

    bool uniform = n % 2 == 1;
    const double step = h.ts[1] - h.ts[0];
    for (std::size_t i = 1; uniform && i < n; ++i)
      uniform = std::abs((h.ts[i] - h.ts[i - 1]) - step) <= 1e-12 * std::max(1.0, std::abs(step));
    if (uniform) {
      double s = f[0] + f[n - 1];
      for (std::size_t i = 1; i + 1 < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f[i];
      const double simp = step / 3.0 * s;
      return {false, simp, "simpson", std::abs(simp - trap)};
    }
    const double coarse = trapezoid(h.ts, f, 2);
    const double err = std::isnan(coarse) ? 0.0 : std::abs(trap - coarse) / 3.0;
    return {false, trap, "trapezoid", err};
  }

  if (h.n0 == 0.0) return {false, 0.0, "closed-form", 0.0};
  if (analytically_divergent(h)) return {true, std::numeric_limits<double>::infinity(), "closed-form", 0.0};
  const double rate = h.omega - 2.0 * h.gamma;
  const double c = h.A * h.A * h.n0;
  double value = 0.0;
  if (std::isinf(h.t1)) value = c * std::exp(rate * h.t0) / -rate;
  else if (rate == 0.0) value = c * (h.t1 - h.t0);
  else value = c * (std::exp(rate * h.t1) - std::exp(rate * h.t0)) / rate;
  return {false, value, "closed-form", 0.0};
}

MeasureResult quadrature_measure(const BranchHistory& h, double tol) {
  validate(h);
  if (h.form != BranchHistory::Form::Exponential) return branch_measure(h);
  if (h.n0 == 0.0) return {false, 0.0, "simpson", 0.0};
  if (analytically_divergent(h)) return {true, std::numeric_limits<double>::infinity(), "simpson", 0.0};
  const double a = h.t0;
  const double b = horizon(h);
  std::size_t n = 64;
  double prev = simpson(h, a, b, n);
  double err = std::numeric_limits<double>::infinity();
  while (n < kMaxIntervals) {
    n *= 2;
    const double cur = simpson(h, a, b, n);
    err = std::abs(cur - prev) / 15.0;
    prev = cur + (cur - prev) / 15.0;
    if (err < tol) break;
  }
  return {false, prev, "simpson", err + tail(h, b)};
}

FamilyMeasures normalize_families(std::span<const BranchHistory> hs) {
  if (hs.empty()) throw Error(ErrorCode::InvalidArgument, "no families to normalize");
  FamilyMeasures out;
  double total = 0.0;
  for (const auto& h : hs) {
    out.names.push_back(h.name);
    out.measures.push_back(branch_measure(h));
    if (out.measures.back().divergent) {
      if (!out.divergent_family) out.divergent_family = h.name;
    } else {
      total += out.measures.back().value;
    }
  }
  if (out.divergent_family) return out;
  if (!(total > 0.0)) throw Error(ErrorCode::NoSupport, "every family has zero measure");
  std::map<std::string, double> t;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    if (t.count(out.names[i])) throw Error(ErrorCode::InvalidArgument, "duplicate family name '" + out.names[i] + "'");
    t[out.names[i]] = out.measures[i].value / total;
  }
  out.table = CredenceTable(std::move(t));
  return out;
}

std::vector<std::array<double, 2>> integrand_samples(const BranchHistory& h, std::size_t count) {
  validate(h);
  std::vector<std::array<double, 2>> out;
  if (h.form == BranchHistory::Form::Tabulated) {
    for (std::size_t i = 0; i < h.ts.size(); ++i) out.push_back({h.ts[i], h.alphas[i] * h.alphas[i] * h.ns[i]});
    return out;
  }
  if (count < 2) count = 2;
  double b = h.t1;
  if (std::isinf(b)) b = analytically_divergent(h) || h.n0 == 0.0 ? h.t0 + 10.0 : horizon(h);
  for (std::size_t i = 0; i < count; ++i) {
    const double t = h.t0 + (b - h.t0) * static_cast<double>(i) / static_cast<double>(count - 1);
    out.push_back({t, integrand(h, t)});
  }
  return out;
}

}  // namespace branchlab
