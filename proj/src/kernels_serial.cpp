// Reference kernels: decompose every flat index into per-factor digits and
// work element by element. Slow, but with no precomputed offset tables.

#include <vector>

#include "branchlab/kernels.hpp"

namespace branchlab::kernels::serial {
namespace {

std::vector<std::size_t> to_digits(std::span<const std::size_t> dims, std::size_t index) {
  std::vector<std::size_t> digits(dims.size());
  for (std::size_t k = dims.size(); k-- > 0;) {
    digits[k] = index % dims[k];
    index /= dims[k];
  }
  return digits;
}

std::size_t from_digits(std::span<const std::size_t> dims, std::span<const std::size_t> digits) {
  std::size_t index = 0;
  for (std::size_t k = 0; k < dims.size(); ++k) index = index * dims[k] + digits[k];
  return index;
}

std::size_t product(std::span<const std::size_t> dims) {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

// Joint index over `positions` read off a full digit vector.
std::size_t sub_index(std::span<const std::size_t> dims, std::span<const std::size_t> positions,
                      std::span<const std::size_t> digits) {
  std::size_t index = 0;
  for (std::size_t p : positions) index = index * dims[p] + digits[p];
  return index;
}

bool traced_digits_equal(std::span<const std::size_t> keep, std::span<const std::size_t> a,
                         std::span<const std::size_t> b) {
  for (std::size_t k = 0; k < a.size(); ++k) {
    bool kept = false;
    for (std::size_t p : keep) kept = kept || p == k;
    if (!kept && a[k] != b[k]) return false;
  }
  return true;
}

std::size_t kept_dim(std::span<const std::size_t> dims, std::span<const std::size_t> keep) {
  std::size_t m = 1;
  for (std::size_t p : keep) m *= dims[p];
  return m;
}

}  // namespace

void apply_on_factors(std::span<const std::size_t> dims, std::span<const std::size_t> targets,
                      const CMatrix& u, std::span<const cplx> in, std::span<cplx> out) {
  const std::size_t n = product(dims);
  const std::size_t m = kept_dim(dims, targets);
  for (std::size_t idx = 0; idx < n; ++idx) {
    const auto digits = to_digits(dims, idx);
    const std::size_t row = sub_index(dims, targets, digits);
    cplx acc{0.0, 0.0};
    for (std::size_t col = 0; col < m; ++col) {
      auto source = digits;
      std::size_t rem = col;
      for (std::size_t t = targets.size(); t-- > 0;) {
        source[targets[t]] = rem % dims[targets[t]];
        rem /= dims[targets[t]];
      }
      acc += u(row, col) * in[from_digits(dims, source)];
    }
    out[idx] = acc;
  }
}

CMatrix reduce_pure(std::span<const std::size_t> dims, std::span<const std::size_t> keep,
                    std::span<const cplx> psi) {
  const std::size_t n = product(dims);
  const std::size_t m = kept_dim(dims, keep);
  CMatrix rho = CMatrix::Zero(m, m);
  for (std::size_t a = 0; a < n; ++a) {
    const auto da = to_digits(dims, a);
    for (std::size_t b = 0; b < n; ++b) {
      const auto db = to_digits(dims, b);
      if (!traced_digits_equal(keep, da, db)) continue;
      rho(sub_index(dims, keep, da), sub_index(dims, keep, db)) += psi[a] * std::conj(psi[b]);
    }
  }
  return rho;
}

CMatrix trace_out(std::span<const std::size_t> dims, std::span<const std::size_t> keep,
                  const CMatrix& rho) {
  const std::size_t n = product(dims);
  const std::size_t m = kept_dim(dims, keep);
  CMatrix out = CMatrix::Zero(m, m);
  for (std::size_t a = 0; a < n; ++a) {
    const auto da = to_digits(dims, a);
    for (std::size_t b = 0; b < n; ++b) {
      const auto db = to_digits(dims, b);
      if (!traced_digits_equal(keep, da, db)) continue;
      out(sub_index(dims, keep, da), sub_index(dims, keep, db)) += rho(a, b);
    }
  }
  return out;
}

}  // namespace branchlab::kernels::serial
