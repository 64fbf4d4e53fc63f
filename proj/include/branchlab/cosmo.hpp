#pragma once

// Observer measure for branch families: integral of |alpha(t)|^2 n(t) dt.

#include <array>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "branchlab/credence.hpp"

namespace branchlab {

struct BranchHistory {
  enum class Form { Exponential, Tabulated };

  std::string name;
  Form form = Form::Exponential;

  // |alpha(t)| = A e^{-gamma t}, n(t) = n0 e^{omega t} on [t0, t1].
  double A = 1.0;
  double gamma = 0.0;
  double omega = 0.0;
  double n0 = 1.0;
  double t0 = 0.0;
  double t1 = std::numeric_limits<double>::infinity();

  // Tabulated samples; alphas are amplitude magnitudes.
  std::vector<double> ts;
  std::vector<double> alphas;
  std::vector<double> ns;

  bool operator==(const BranchHistory&) const = default;
};

struct MeasureResult {
  bool divergent = false;
  double value = 0.0;
  std::string method;  ///< "closed-form", "simpson", "trapezoid"
  double error_estimate = 0.0;

  bool operator==(const MeasureResult&) const = default;
};

/// Closed form for exponential histories (divergence decided analytically),
/// composite quadrature for tabulated ones.
MeasureResult branch_measure(const BranchHistory& h);

/// Numerical route for an exponential history: adaptive composite Simpson on
/// [t0, H] where the analytic tail beyond H is below 1e-10. Used to check the
/// closed form.
MeasureResult quadrature_measure(const BranchHistory& h, double tol = 1e-10);

struct FamilyMeasures {
  std::vector<std::string> names;
  std::vector<MeasureResult> measures;
  std::optional<CredenceTable> table;          ///< absent when any family diverges
  std::optional<std::string> divergent_family;  ///< first divergent family

  bool operator==(const FamilyMeasures&) const = default;
};

FamilyMeasures normalize_families(std::span<const BranchHistory> hs);

/// (t, |alpha|^2 n) pairs for plotting; `count` evenly spaced points, or the
/// samples themselves for tabulated histories. Infinite ranges stop at the
/// horizon used by quadrature_measure.
std::vector<std::array<double, 2>> integrand_samples(const BranchHistory& h, std::size_t count = 200);

}  // namespace branchlab
