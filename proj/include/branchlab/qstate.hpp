#pragma once

// Dense linear algebra over labeled tensor-factored spaces.
//
// Basis-index convention: row-major over the ordered factor sequence, the
// first factor varies slowest. Branch labels and every kernel depend on it.

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace branchlab {

using cplx = std::complex<double>;
using CMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kDefaultTol = 1e-10;
inline constexpr std::size_t kMaxJointDim = std::size_t{1} << 14;

/// A named factor of the joint space. `symbols`, when present, names each
/// basis state ("R", "up", "down", ...); otherwise basis states are named by
/// their decimal index.
struct Subsystem {
  std::string name;
  std::size_t dim = 1;
  std::vector<std::string> symbols;

  std::string symbol(std::size_t index) const;
  std::optional<std::size_t> find_symbol(std::string_view sym) const;

  bool operator==(const Subsystem&) const = default;
};

class Space {
 public:
  Space() = default;
  explicit Space(std::vector<Subsystem> factors);

  const std::vector<Subsystem>& factors() const noexcept { return factors_; }
  std::size_t size() const noexcept { return factors_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  std::vector<std::size_t> dims() const;

  bool contains(std::string_view name) const noexcept;
  std::size_t position(std::string_view name) const;
  const Subsystem& at(std::string_view name) const;
  std::vector<std::size_t> positions(std::span<const std::string> names) const;

  /// Factors at the given positions, in the order given.
  Space select(std::span<const std::size_t> positions) const;
  Space concat(const Space& other) const;

  std::size_t stride(std::size_t position) const { return strides_.at(position); }
  std::vector<std::size_t> digits(std::size_t index) const;
  std::size_t index(std::span<const std::size_t> digits) const;

  bool operator==(const Space& other) const { return factors_ == other.factors_; }

 private:
  std::vector<Subsystem> factors_;
  std::vector<std::size_t> strides_;
  std::size_t dim_ = 1;
};

class StateVector {
 public:
  StateVector() = default;
  StateVector(Space space, std::vector<cplx> amps);

  static StateVector basis(Space space, std::size_t index);
  static StateVector of(Subsystem factor, std::vector<cplx> amps);

  const Space& space() const noexcept { return space_; }
  std::span<const cplx> amps() const noexcept { return amps_; }
  cplx operator[](std::size_t i) const { return amps_[i]; }
  std::size_t dim() const noexcept { return amps_.size(); }

  double norm() const;
  StateVector normalized() const;

  /// Squared amplitude summed over all basis states whose digit for factor
  /// `name` equals each value: the marginal distribution of that factor.
  std::vector<double> marginal(std::string_view name) const;

  bool operator==(const StateVector&) const = default;

 private:
  Space space_;
  std::vector<cplx> amps_;
};

double max_abs_diff(const StateVector& a, const StateVector& b);

class DensityOperator {
 public:
  DensityOperator() = default;
  DensityOperator(Space space, CMatrix mat);

  const Space& space() const noexcept { return space_; }
  const CMatrix& mat() const noexcept { return mat_; }
  cplx trace() const { return mat_.trace(); }

  /// Hermitian, unit trace, and no eigenvalue below -1e-10.
  bool is_valid(double tol = kDefaultTol) const;

 private:
  Space space_;
  CMatrix mat_;
};

/// Largest entry-wise deviation. Spaces must agree in labels and dims.
double max_abs_diff(const DensityOperator& a, const DensityOperator& b);

class UnitaryOp {
 public:
  UnitaryOp(std::vector<std::string> targets, CMatrix mat, double tol = kDefaultTol);

  const std::vector<std::string>& targets() const noexcept { return targets_; }
  const CMatrix& mat() const noexcept { return mat_; }

  static UnitaryOp identity(std::vector<std::string> targets, std::size_t dim);

 private:
  std::vector<std::string> targets_;
  CMatrix mat_;
};

/// Tensor product of two operators on disjoint targets; `a` is the slow factor.
UnitaryOp kron(const UnitaryOp& a, const UnitaryOp& b);

/// Joint space is a ++ b; amplitudes are products.
StateVector tensor(const StateVector& a, const StateVector& b);
StateVector tensor(std::span<const StateVector> parts);

StateVector apply_unitary(const StateVector& s, const UnitaryOp& u);

DensityOperator density_of(const StateVector& s, double tol = kDefaultTol);

/// Reduced operator on `keep`; kept factors retain their order in rho's
/// space. Result is hermitized as (m + m^dagger) / 2.
DensityOperator partial_trace(const DensityOperator& rho, std::span<const std::string> keep);
DensityOperator partial_trace(const DensityOperator& rho, std::initializer_list<std::string> keep);

/// partial_trace(density_of(s), keep) without materializing the full outer product.
DensityOperator reduced_density(const StateVector& s, std::span<const std::string> keep);
DensityOperator reduced_density(const StateVector& s, std::initializer_list<std::string> keep);

/// u * rho * u^dagger where u acts on a subset of rho's factors.
DensityOperator evolve(const DensityOperator& rho, const UnitaryOp& u);

}  // namespace branchlab
