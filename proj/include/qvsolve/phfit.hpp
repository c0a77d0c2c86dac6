#pragma once

#include <vector>

#include "qvsolve/model.hpp"
#include "qvsolve/types.hpp"

namespace qvsolve {

// Target inter-arrival law for the phase-type fitting pipeline.  Log-normal
// is what the pipeline was built for; other families can slot in through the
// same moment interface.
struct FitTarget {
    double shape = 1.0;  // sigma of log X
    double scale = 0.0;  // mean of log X

    // k-th raw moment exp(k * scale + k^2 shape^2 / 2).
    double moment(int k) const;
    double density(double x) const;
};

// mu_1..mu_count with an overflow guard (log-normal moments explode).
std::vector<double> target_moments(const FitTarget& target, int count);

// Rational [p/q] approximant of the LST f*(s) = sum (-1)^k mu_k s^k / k!,
// both constant terms normalized to 1.  Coefficient index equals the power
// of s.
struct PadeApproximant {
    std::vector<double> numerator;    // length p+1
    std::vector<double> denominator;  // length q+1
};

PadeApproximant pade_lst(const std::vector<double>& moments, int p = 2, int q = 3);

// Magnitudes of the (real, negative) denominator roots, ascending.
std::vector<double> rates_from_denominator(const PadeApproximant& pade);

struct AcyclicPHFit {
    std::vector<double> rates;  // ascending
    RowVector alpha;
    Vector weights;
    double objective = 0.0;

    // Canonical bidiagonal representation.
    PhaseTypeDistribution ph() const;
};

// Weighted least-squares moment match of alpha over the probability simplex
// with the rates held fixed: dense simplex grid plus exact refinement on the
// active face.
AcyclicPHFit fit_alpha(const FitTarget& target, const std::vector<double>& rates,
                       const Vector& weights);

// Objective value of a given alpha under the same moment-matching loss.
double fit_objective(const FitTarget& target, const std::vector<double>& rates,
                     const Vector& weights, const RowVector& alpha);

// Lag-1 correlation of successive intervals of the stationary service point
// process.
double service_lag1_correlation(const MarkovianService& service);

}  // namespace qvsolve
