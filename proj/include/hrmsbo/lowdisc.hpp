#pragma once

#include "hrmsbo/rng.hpp"
#include "hrmsbo/types.hpp"

namespace hrmsbo {

/// First `count` points of the d-dimensional Kronecker (generalized golden
/// ratio) sequence, shifted by `shift` modulo 1. Rows are points in [0,1)^d.
Mat kronecker_sequence(int count, int dim, const Vec& shift);

/// Same sequence with a random Cranley-Patterson rotation drawn from `rng`,
/// giving an unbiased low-discrepancy point set.
Mat low_discrepancy(int count, int dim, Rng& rng);

/// Deterministic, rotation-free variant for audit grids in d > 2.
Mat low_discrepancy_fixed(int count, int dim);

}  // namespace hrmsbo
