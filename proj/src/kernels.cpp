#include "branchlab/kernels.hpp"

#include <vector>

namespace branchlab::kernels {
namespace {

// Parallel regions only pay off once there is real work per row.
constexpr std::size_t kParallelThreshold = 1 << 12;

std::vector<std::size_t> strides_of(std::span<const std::size_t> dims) {
  std::vector<std::size_t> strides(dims.size(), 1);
  for (std::size_t k = dims.size(); k-- > 1;) strides[k - 1] = strides[k] * dims[k];
  return strides;
}

// Flat offsets contributed by every joint index over `positions` (row-major in
// the order given).
std::vector<std::size_t> offsets_over(std::span<const std::size_t> dims,
                                      std::span<const std::size_t> strides,
                                      std::span<const std::size_t> positions) {
  std::vector<std::size_t> offsets{0};
  for (std::size_t p : positions) {
    std::vector<std::size_t> next;
    next.reserve(offsets.size() * dims[p]);
    for (std::size_t base : offsets)
      for (std::size_t d = 0; d < dims[p]; ++d) next.push_back(base + d * strides[p]);
    offsets = std::move(next);
  }
  return offsets;
}

std::vector<std::size_t> complement(std::size_t n, std::span<const std::size_t> selected) {
  std::vector<bool> used(n, false);
  for (std::size_t p : selected) used[p] = true;
  std::vector<std::size_t> rest;
  for (std::size_t p = 0; p < n; ++p)
    if (!used[p]) rest.push_back(p);
  return rest;
}

}  // namespace

void apply_on_factors(std::span<const std::size_t> dims, std::span<const std::size_t> targets,
                      const CMatrix& u, std::span<const cplx> in, std::span<cplx> out) {
  const auto strides = strides_of(dims);
  const auto target_off = offsets_over(dims, strides, targets);
  const auto rest = complement(dims.size(), targets);
  const auto rest_off = offsets_over(dims, strides, rest);
  const auto m = static_cast<std::ptrdiff_t>(target_off.size());
  const auto rows = static_cast<std::ptrdiff_t>(rest_off.size());

#pragma omp parallel for schedule(static) if (in.size() * target_off.size() > kParallelThreshold)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    const std::size_t base = rest_off[r];
    for (std::ptrdiff_t i = 0; i < m; ++i) {
      cplx acc{0.0, 0.0};
      for (std::ptrdiff_t j = 0; j < m; ++j) acc += u(i, j) * in[base + target_off[j]];
      out[base + target_off[i]] = acc;
    }
  }
}

CMatrix reduce_pure(std::span<const std::size_t> dims, std::span<const std::size_t> keep,
                    std::span<const cplx> psi) {
  const auto strides = strides_of(dims);
  const auto keep_off = offsets_over(dims, strides, keep);
  const auto traced_off = offsets_over(dims, strides, complement(dims.size(), keep));
  const auto m = static_cast<std::ptrdiff_t>(keep_off.size());
  CMatrix rho = CMatrix::Zero(m, m);

#pragma omp parallel for schedule(static) if (psi.size() * keep_off.size() > kParallelThreshold)
  for (std::ptrdiff_t i = 0; i < m; ++i) {
    for (std::ptrdiff_t j = 0; j < m; ++j) {
      cplx acc{0.0, 0.0};
      for (std::size_t t : traced_off) acc += psi[keep_off[i] + t] * std::conj(psi[keep_off[j] + t]);
      rho(i, j) = acc;
    }
  }
  return rho;
}

CMatrix trace_out(std::span<const std::size_t> dims, std::span<const std::size_t> keep,
                  const CMatrix& rho) {
  const auto strides = strides_of(dims);
  const auto keep_off = offsets_over(dims, strides, keep);
  const auto traced_off = offsets_over(dims, strides, complement(dims.size(), keep));
  const auto m = static_cast<std::ptrdiff_t>(keep_off.size());
  CMatrix out = CMatrix::Zero(m, m);

#pragma omp parallel for schedule(static) if (static_cast<std::size_t>(rho.size()) > kParallelThreshold)
  for (std::ptrdiff_t i = 0; i < m; ++i) {
    for (std::ptrdiff_t j = 0; j < m; ++j) {
      cplx acc{0.0, 0.0};
      for (std::size_t t : traced_off) acc += rho(keep_off[i] + t, keep_off[j] + t);
      out(i, j) = acc;
    }
  }
  return out;
}

}  // namespace branchlab::kernels
