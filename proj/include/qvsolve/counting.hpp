#pragma once

#include "qvsolve/model.hpp"
#include "qvsolve/types.hpp"

namespace qvsolve {

// Counting probabilities P(n, t) of the service process: entry (i, j) is the
// probability that n services complete in (0, t] and the phase moves i -> j,
// with no interruption.  Computed by uniformization, so every entry is
// nonnegative and the Poisson truncation error is certified below
// `tolerance` per entry.
MatrixSequence counting_probabilities(const MarkovianService& service, int n_max, double t,
                                      double tolerance = 1e-12);

}  // namespace qvsolve
