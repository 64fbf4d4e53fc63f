#include "branchlab/qstate.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <Eigen/Eigenvalues>

#include "branchlab/error.hpp"
#include "branchlab/kernels.hpp"

namespace branchlab {

std::string Subsystem::symbol(std::size_t index) const {
  if (index < symbols.size()) return symbols[index];
  return std::to_string(index);
}

std::optional<std::size_t> Subsystem::find_symbol(std::string_view sym) const {
  for (std::size_t i = 0; i < dim; ++i)
    if (symbol(i) == sym) return i;
  return std::nullopt;
}

Space::Space(std::vector<Subsystem> factors) : factors_(std::move(factors)) {
  std::unordered_set<std::string> seen;
  for (const auto& f : factors_) {
    if (f.dim < 1) throw Error(ErrorCode::InvalidArgument, "subsystem '" + f.name + "' has dim 0");
    if (!f.symbols.empty() && f.symbols.size() != f.dim)
      throw Error(ErrorCode::InvalidArgument, "subsystem '" + f.name + "' symbol count differs from dim");
    if (!seen.insert(f.name).second) throw Error(ErrorCode::LabelCollision, "duplicate label '" + f.name + "'");
  }
  strides_.assign(factors_.size(), 1);
  dim_ = 1;
  for (std::size_t k = factors_.size(); k-- > 0;) {
    strides_[k] = dim_;
    dim_ *= factors_[k].dim;
    if (dim_ > kMaxJointDim)
      throw Error(ErrorCode::DimensionTooLarge,
                  "joint dimension exceeds " + std::to_string(kMaxJointDim));
  }
}

std::vector<std::size_t> Space::dims() const {
  std::vector<std::size_t> d;
  d.reserve(factors_.size());
  for (const auto& f : factors_) d.push_back(f.dim);
  return d;
}

bool Space::contains(std::string_view name) const noexcept {
  return std::any_of(factors_.begin(), factors_.end(), [&](const auto& f) { return f.name == name; });
}

std::size_t Space::position(std::string_view name) const {
  for (std::size_t k = 0; k < factors_.size(); ++k)
    if (factors_[k].name == name) return k;
  throw Error(ErrorCode::LabelMissing, "no subsystem '" + std::string(name) + "'");
}

const Subsystem& Space::at(std::string_view name) const { return factors_[position(name)]; }

std::vector<std::size_t> Space::positions(std::span<const std::string> names) const {
  std::vector<std::size_t> out;
  out.reserve(names.size());
  for (const auto& n : names) out.push_back(position(n));
  return out;
}

Space Space::select(std::span<const std::size_t> positions) const {
  std::vector<Subsystem> f;
  f.reserve(positions.size());
  for (auto p : positions) f.push_back(factors_.at(p));
  return Space(std::move(f));
}

Space Space::concat(const Space& other) const {
  auto f = factors_;
  f.insert(f.end(), other.factors_.begin(), other.factors_.end());
  return Space(std::move(f));
}

std::vector<std::size_t> Space::digits(std::size_t index) const {
  std::vector<std::size_t> d(factors_.size());
  for (std::size_t k = 0; k < factors_.size(); ++k) d[k] = (index / strides_[k]) % factors_[k].dim;
  return d;
}

std::size_t Space::index(std::span<const std::size_t> digits) const {
  std::size_t idx = 0;
  for (std::size_t k = 0; k < factors_.size(); ++k) idx += digits[k] * strides_[k];
  return idx;
}

StateVector::StateVector(Space space, std::vector<cplx> amps) : space_(std::move(space)), amps_(std::move(amps)) {
  if (amps_.size() != space_.dim())
    throw Error(ErrorCode::InvalidArgument, "amplitude count " + std::to_string(amps_.size()) +
                                                " does not match joint dimension " + std::to_string(space_.dim()));
}

StateVector StateVector::basis(Space space, std::size_t index) {
  std::vector<cplx> amps(space.dim(), cplx{0.0, 0.0});
  amps.at(index) = 1.0;
  return StateVector(std::move(space), std::move(amps));
}

StateVector StateVector::of(Subsystem factor, std::vector<cplx> amps) {
  return StateVector(Space({std::move(factor)}), std::move(amps));
}

double StateVector::norm() const {
  double sum = 0.0;
  for (const auto& a : amps_) sum += std::norm(a);
  return std::sqrt(sum);
}

StateVector StateVector::normalized() const {
  const double n = norm();
  if (n == 0.0) throw Error(ErrorCode::NotNormalized, "zero vector cannot be normalized");
  auto amps = amps_;
  for (auto& a : amps) a /= n;
  return StateVector(space_, std::move(amps));
}

std::vector<double> StateVector::marginal(std::string_view name) const {
  const std::size_t p = space_.position(name);
  const std::size_t d = space_.factors()[p].dim;
  const std::size_t stride = space_.stride(p);
  std::vector<double> out(d, 0.0);
  for (std::size_t i = 0; i < amps_.size(); ++i) out[(i / stride) % d] += std::norm(amps_[i]);
  return out;
}

double max_abs_diff(const StateVector& a, const StateVector& b) {
  if (!(a.space() == b.space())) throw Error(ErrorCode::InvalidArgument, "state spaces differ");
  double m = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

DensityOperator::DensityOperator(Space space, CMatrix mat) : space_(std::move(space)), mat_(std::move(mat)) {
  const auto n = static_cast<Eigen::Index>(space_.dim());
  if (mat_.rows() != n || mat_.cols() != n)
    throw Error(ErrorCode::InvalidArgument, "density matrix shape does not match its space");
}

bool DensityOperator::is_valid(double tol) const {
  if ((mat_ - mat_.adjoint()).cwiseAbs().maxCoeff() > tol) return false;
  if (std::abs(mat_.trace() - cplx{1.0, 0.0}) > tol) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Eigen::MatrixXcd(mat_), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -1e-10;
}

double max_abs_diff(const DensityOperator& a, const DensityOperator& b) {
  if (!(a.space() == b.space())) throw Error(ErrorCode::InvalidArgument, "operator spaces differ");
  return (a.mat() - b.mat()).cwiseAbs().maxCoeff();
}

UnitaryOp::UnitaryOp(std::vector<std::string> targets, CMatrix mat, double tol)
    : targets_(std::move(targets)), mat_(std::move(mat)) {
  if (mat_.rows() != mat_.cols()) throw Error(ErrorCode::NotUnitary, "matrix is not square");
  std::unordered_set<std::string> seen(targets_.begin(), targets_.end());
  if (seen.size() != targets_.size()) throw Error(ErrorCode::LabelCollision, "repeated unitary target");
  const CMatrix gram = mat_.adjoint() * mat_;
  const double dev = (gram - CMatrix::Identity(mat_.rows(), mat_.cols())).cwiseAbs().maxCoeff();
  if (dev > tol) throw Error(ErrorCode::NotUnitary, "|U^dagger U - I| = " + std::to_string(dev));
}

UnitaryOp UnitaryOp::identity(std::vector<std::string> targets, std::size_t dim) {
  const auto n = static_cast<Eigen::Index>(dim);
  return UnitaryOp(std::move(targets), CMatrix::Identity(n, n));
}

UnitaryOp kron(const UnitaryOp& a, const UnitaryOp& b) {
  auto targets = a.targets();
  targets.insert(targets.end(), b.targets().begin(), b.targets().end());
  const auto& A = a.mat();
  const auto& B = b.mat();
  CMatrix k(A.rows() * B.rows(), A.cols() * B.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      k.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return UnitaryOp(std::move(targets), std::move(k));
}

StateVector tensor(const StateVector& a, const StateVector& b) {
  Space joint = a.space().concat(b.space());
  std::vector<cplx> amps;
  amps.reserve(joint.dim());
  for (auto x : a.amps())
    for (auto y : b.amps()) amps.push_back(x * y);
  return StateVector(std::move(joint), std::move(amps));
}

StateVector tensor(std::span<const StateVector> parts) {
  if (parts.empty()) return StateVector(Space{}, {cplx{1.0, 0.0}});
  StateVector out = parts.front();
  for (std::size_t k = 1; k < parts.size(); ++k) out = tensor(out, parts[k]);
  return out;
}

StateVector apply_unitary(const StateVector& s, const UnitaryOp& u) {
  const auto targets = s.space().positions(u.targets());
  std::size_t tdim = 1;
  for (auto p : targets) tdim *= s.space().factors()[p].dim;
  if (static_cast<std::size_t>(u.mat().rows()) != tdim)
    throw Error(ErrorCode::InvalidArgument, "unitary dimension does not match its targets");
  const auto dims = s.space().dims();
  std::vector<cplx> out(s.dim());
  kernels::apply_on_factors(dims, targets, u.mat(), s.amps(), out);
  return StateVector(s.space(), std::move(out));
}

DensityOperator density_of(const StateVector& s, double tol) {
  const double n = s.norm();
  if (n == 0.0 || std::abs(n - 1.0) > tol)
    throw Error(ErrorCode::NotNormalized, "state norm is " + std::to_string(n));
  const auto d = static_cast<Eigen::Index>(s.dim());
  Eigen::Map<const Eigen::VectorXcd> v(s.amps().data(), d);
  return DensityOperator(s.space(), v * v.adjoint());
}

namespace {

std::vector<std::size_t> keep_positions(const Space& space, std::span<const std::string> keep) {
  if (keep.empty()) throw Error(ErrorCode::EmptyKeepSet, "partial trace needs at least one kept subsystem");
  auto pos = space.positions(keep);
  std::sort(pos.begin(), pos.end());
  if (std::adjacent_find(pos.begin(), pos.end()) != pos.end())
    throw Error(ErrorCode::LabelCollision, "repeated label in keep set");
  return pos;
}

CMatrix hermitize(const CMatrix& m) { return (m + m.adjoint()) * 0.5; }

}  // namespace

DensityOperator partial_trace(const DensityOperator& rho, std::span<const std::string> keep) {
  const auto pos = keep_positions(rho.space(), keep);
  const auto dims = rho.space().dims();
  return DensityOperator(rho.space().select(pos), hermitize(kernels::trace_out(dims, pos, rho.mat())));
}

DensityOperator partial_trace(const DensityOperator& rho, std::initializer_list<std::string> keep) {
  return partial_trace(rho, std::span<const std::string>(keep.begin(), keep.size()));
}

DensityOperator reduced_density(const StateVector& s, std::span<const std::string> keep) {
  const auto pos = keep_positions(s.space(), keep);
  const auto dims = s.space().dims();
  return DensityOperator(s.space().select(pos), hermitize(kernels::reduce_pure(dims, pos, s.amps())));
}

DensityOperator reduced_density(const StateVector& s, std::initializer_list<std::string> keep) {
  return reduced_density(s, std::span<const std::string>(keep.begin(), keep.size()));
}

DensityOperator evolve(const DensityOperator& rho, const UnitaryOp& u) {
  // Treat rho as a vector over (space ++ space): u acts on the row copy,
  // conj(u) on the column copy.
  const auto targets = rho.space().positions(u.targets());
  auto dims = rho.space().dims();
  const std::size_t n = dims.size();
  dims.insert(dims.end(), dims.begin(), dims.begin() + static_cast<std::ptrdiff_t>(n));
  std::vector<std::size_t> col_targets;
  for (auto p : targets) col_targets.push_back(p + n);

  std::vector<cplx> flat(rho.mat().data(), rho.mat().data() + rho.mat().size());
  std::vector<cplx> tmp(flat.size());
  kernels::apply_on_factors(dims, targets, u.mat(), flat, tmp);
  const CMatrix uc = u.mat().conjugate();
  kernels::apply_on_factors(dims, col_targets, uc, tmp, flat);

  const auto d = static_cast<Eigen::Index>(rho.space().dim());
  CMatrix out = Eigen::Map<const CMatrix>(flat.data(), d, d);
  return DensityOperator(rho.space(), std::move(out));
}

}  // namespace branchlab
