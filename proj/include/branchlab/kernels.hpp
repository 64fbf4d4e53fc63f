#pragma once

// Index kernels behind qstate. The top-level functions are OpenMP-parallel
// over output rows (each output element is written by exactly one thread, so
// results do not depend on the thread count). The `serial` namespace keeps a
// straightforward per-element reference used by the tests and the benchmark.

#include <cstddef>
#include <span>

#include "branchlab/qstate.hpp"

namespace branchlab::kernels {

/// out = (u on factors `targets`) * in, for a vector laid out over `dims`.
/// The matrix is indexed row-major over the targets in the order given.
void apply_on_factors(std::span<const std::size_t> dims, std::span<const std::size_t> targets,
                      const CMatrix& u, std::span<const cplx> in, std::span<cplx> out);

/// rho_K[i][j] = sum_t psi[i,t] conj(psi[j,t]) over the complement of `keep`.
CMatrix reduce_pure(std::span<const std::size_t> dims, std::span<const std::size_t> keep,
                    std::span<const cplx> psi);

/// rho_K[i][j] = sum_t rho[(i,t),(j,t)].
CMatrix trace_out(std::span<const std::size_t> dims, std::span<const std::size_t> keep,
                  const CMatrix& rho);

namespace serial {

void apply_on_factors(std::span<const std::size_t> dims, std::span<const std::size_t> targets,
                      const CMatrix& u, std::span<const cplx> in, std::span<cplx> out);

CMatrix reduce_pure(std::span<const std::size_t> dims, std::span<const std::size_t> keep,
                    std::span<const cplx> psi);

CMatrix trace_out(std::span<const std::size_t> dims, std::span<const std::size_t> keep,
                  const CMatrix& rho);

}  // namespace serial

}  // namespace branchlab::kernels
