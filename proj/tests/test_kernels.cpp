#include <algorithm>
#include <numeric>

#include "doctest.h"

#include "branchlab/kernels.hpp"
#include "branchlab/random.hpp"

using namespace branchlab;

namespace {

struct Layout {
  std::vector<std::size_t> dims;
  std::vector<std::size_t> picked;  // distinct positions, random order
};

Layout random_layout(Rng& rng) {
  std::uniform_int_distribution<std::size_t> nf(1, 4), dim(1, 3);
  Layout l;
  l.dims.resize(nf(rng));
  for (auto& d : l.dims) d = dim(rng);
  std::vector<std::size_t> pos(l.dims.size());
  std::iota(pos.begin(), pos.end(), 0);
  std::shuffle(pos.begin(), pos.end(), rng);
  std::uniform_int_distribution<std::size_t> k(1, pos.size());
  pos.resize(k(rng));
  l.picked = pos;
  return l;
}

std::vector<cplx> random_vector(std::size_t n, Rng& rng) {
  std::normal_distribution<double> g;
  std::vector<cplx> v(n);
  for (auto& x : v) x = {g(rng), g(rng)};
  return v;
}

std::size_t product(const std::vector<std::size_t>& dims, const std::vector<std::size_t>& pos) {
  std::size_t m = 1;
  for (auto p : pos) m *= dims[p];
  return m;
}

std::size_t product(const std::vector<std::size_t>& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

TEST_CASE("parallel apply_on_factors matches the reference, including permuted targets") {
  for (std::uint64_t t = 0; t < 200; ++t) {
    auto rng = trial_rng(21, t);
    const auto l = random_layout(rng);
    const auto u = random_unitary_matrix(product(l.dims, l.picked), rng);
    const auto in = random_vector(product(l.dims), rng);
    std::vector<cplx> fast(in.size()), ref(in.size());
    kernels::apply_on_factors(l.dims, l.picked, u, in, fast);
    kernels::serial::apply_on_factors(l.dims, l.picked, u, in, ref);
    double dev = 0.0;
    for (std::size_t i = 0; i < in.size(); ++i) dev = std::max(dev, std::abs(fast[i] - ref[i]));
    CHECK(dev < 1e-12);
  }
}

TEST_CASE("parallel reduce_pure matches the reference") {
  for (std::uint64_t t = 0; t < 200; ++t) {
    auto rng = trial_rng(22, t);
    const auto l = random_layout(rng);
    const auto psi = random_vector(product(l.dims), rng);
    const auto fast = kernels::reduce_pure(l.dims, l.picked, psi);
    const auto ref = kernels::serial::reduce_pure(l.dims, l.picked, psi);
    REQUIRE(fast.rows() == ref.rows());
    CHECK((fast - ref).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("parallel trace_out matches the reference") {
  for (std::uint64_t t = 0; t < 200; ++t) {
    auto rng = trial_rng(23, t);
    const auto l = random_layout(rng);
    const auto n = static_cast<Eigen::Index>(product(l.dims));
    const auto a = random_unitary_matrix(static_cast<std::size_t>(n), rng);
    const CMatrix rho = a * a.adjoint();
    const auto fast = kernels::trace_out(l.dims, l.picked, rho);
    const auto ref = kernels::serial::trace_out(l.dims, l.picked, rho);
    REQUIRE(fast.rows() == ref.rows());
    CHECK((fast - ref).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("keeping every factor in order is the identity for reduce and trace") {
  auto rng = trial_rng(24, 0);
  const std::vector<std::size_t> dims{2, 3};
  const std::vector<std::size_t> all{0, 1};
  const auto psi = random_vector(6, rng);
  const auto rho = kernels::reduce_pure(dims, all, psi);
  for (Eigen::Index i = 0; i < 6; ++i)
    for (Eigen::Index j = 0; j < 6; ++j)
      CHECK(std::abs(rho(i, j) - psi[static_cast<std::size_t>(i)] * std::conj(psi[static_cast<std::size_t>(j)])) < 1e-12);
  CHECK((kernels::trace_out(dims, all, rho) - rho).cwiseAbs().maxCoeff() < 1e-15);
}
