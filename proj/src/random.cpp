#include "branchlab/random.hpp"

#include <Eigen/QR>

namespace branchlab {

Rng trial_rng(std::uint64_t seed, std::uint64_t trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32), 0x9e3779b9u};
  return Rng(seq);
}

StateVector random_state(const Space& space, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<cplx> amps(space.dim());
  for (auto& a : amps) {
    const double re = gauss(rng);
    const double im = gauss(rng);
    a = {re, im};
  }
  return StateVector(space, std::move(amps)).normalized();
}

CMatrix random_unitary_matrix(std::size_t dim, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto n = static_cast<Eigen::Index>(dim);
  Eigen::MatrixXcd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double re = gauss(rng);
      const double im = gauss(rng);
      g(i, j) = {re, im};
    }
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
  Eigen::MatrixXcd q = qr.householderQ();
  const Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < n; ++j) {
    const double mag = std::abs(r(j, j));
    if (mag > 0.0) q.col(j) *= r(j, j) / mag;
  }
  return CMatrix(q);
}

UnitaryOp random_unitary(std::vector<std::string> targets, std::size_t dim, Rng& rng) {
  return UnitaryOp(std::move(targets), random_unitary_matrix(dim, rng));
}

}  // namespace branchlab
