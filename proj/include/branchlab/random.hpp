#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "branchlab/qstate.hpp"

namespace branchlab {

using Rng = std::mt19937_64;

/// Independent, reproducible stream for trial `trial` of a run seeded with `seed`.
Rng trial_rng(std::uint64_t seed, std::uint64_t trial);

/// Haar-ish random normalized vector (complex Gaussian entries, normalized).
StateVector random_state(const Space& space, Rng& rng);

/// Haar-random unitary via QR of a complex Ginibre matrix with the phases of
/// R's diagonal divided out.
CMatrix random_unitary_matrix(std::size_t dim, Rng& rng);
UnitaryOp random_unitary(std::vector<std::string> targets, std::size_t dim, Rng& rng);

}  // namespace branchlab
