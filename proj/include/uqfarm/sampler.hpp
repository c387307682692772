#pragma once

#include <cstdint>

#include "uqfarm/types.hpp"

namespace uqfarm {

// n independent draws per variable from Normal(mean_i, std_dev_i).
// Deterministic in (spec variables, n, seed); each column uses its own
// substream so columns are independent.
SampleMatrix draw_monte_carlo(const StudySpec& spec, int n, std::uint64_t seed);

// Midpoint Latin hypercube in probability space: per column, the n rows
// occupy the n equiprobable strata of Normal(mean_i, std_dev_i) exactly
// once (stratum midpoints through the inverse CDF), row assignment
// permuted per column by seed.
SampleMatrix draw_regular_design(const StudySpec& spec, int n, std::uint64_t seed);

} // namespace uqfarm
