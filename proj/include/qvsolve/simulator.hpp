#pragma once

#include <cstdint>
#include <vector>

#include "qvsolve/model.hpp"
#include "qvsolve/types.hpp"

namespace qvsolve {

struct SimConfig {
    QueueModel model;
    long arrivals = 1'000'000;
    long warmup = -1;  // negative: 10% of arrivals
    std::uint64_t seed = 1;
    int batch_count = 32;
    // The first service after dormancy resumes in the frozen phase; the
    // alternative (redrawn from the stationary phase vector) exists only for
    // sensitivity diagnosis.
    bool frozen_phase_resume = true;
};

struct MeasureEstimate {
    double mean = 0.0;
    double half_width = 0.0;  // 95% batch-means half width

    bool covers(double value) const {
        return value >= mean - half_width && value <= mean + half_width;
    }
};

struct SimResult {
    // Censuses, normalized: index = customers in system.
    std::vector<RowVector> pre_arrival_vac;
    std::vector<RowVector> pre_arrival_busy;  // busy-or-dormant tag
    std::vector<RowVector> arbitrary_vac;     // time weighted
    std::vector<RowVector> arbitrary_busy;
    std::vector<RowVector> post_departure;

    MeasureEstimate L_s;
    MeasureEstimate W_s;
    MeasureEstimate rho_prime;
    MeasureEstimate E_B;
    MeasureEstimate E_I;
    MeasureEstimate lambda_hat;
    MeasureEstimate mu_star_hat;
    MeasureEstimate pre_arrival_vac_mass;

    long arrivals_simulated = 0;
    long departures = 0;
    long in_system_at_end = 0;
    double horizon = 0.0;  // simulated time span after warmup
};

// Discrete-event simulation of the queue.  Requires a proper (sampleable)
// phase-type arrival law.
SimResult simulate(const SimConfig& config);

}  // namespace qvsolve
