#pragma once

#include <vector>

#include "qvsolve/kernels.hpp"
#include "qvsolve/model.hpp"
#include "qvsolve/roots.hpp"
#include "qvsolve/types.hpp"

namespace qvsolve {

// Solved boundary constants of the pre-arrival system: residue rows k_ij
// (one row per root) and the level-0 vacation vector b.
struct BoundarySolution {
    ComplexMatrix k;                   // m x m
    Vector b;                          // m
    std::vector<Complex> root_values;  // roots the residues are attached to
    double residual = 0.0;
    double condition_number = 0.0;
    int replaced_row = -1;  // row substituted by the normalization condition
};

// Assembled linear system, kept with every original equation so redundancy
// can be verified after the solve.
struct BoundarySystem {
    ComplexMatrix lhs;       // m(m+1) x m(m+1), with one row replaced
    ComplexVector rhs;
    ComplexMatrix full_lhs;  // m(m+1)+1 rows: all balance equations + normalization
    ComplexVector full_rhs;
    int replaced_row = -1;
    double condition_number = 0.0;
    Eigen::Index m = 0;
};

BoundarySystem assemble_boundary_system(const QueueModel& model, const KernelSet& kernels,
                                        const RootSet& roots);

BoundarySolution solve_boundary(const BoundarySystem& system, const RootSet& roots);

// Steady-state distributions at the four epoch types.  Levels 0..n_report are
// materialized; beyond that every sequence is an exact geometric mix of omega
// and the characteristic roots through the stored generators:
//   pi0(n)  = vac_geo * omega^{n-1}                                   (n >= 1)
//   pi1(n)  = busy_geo_omega * omega^{n-1} + sum_i busy_geo_roots[i] *
//             root^{n-1}                                              (n >= 1)
struct EpochDistributions {
    int n_report = 0;
    std::vector<RowVector> pre_vac;      // pi0^-(n)
    std::vector<RowVector> pre_busy;     // pi1^-(n)
    std::vector<RowVector> arb_vac;      // pi0(n)
    std::vector<RowVector> arb_busy;     // pi1(n)
    std::vector<RowVector> post_dep;     // pi+(n)
    std::vector<RowVector> pre_service;  // pi^{s-}(n), n >= 1 (index 0 unused)

    RowVector vac_geo;
    RowVector busy_geo_omega;
    ComplexMatrix busy_geo_roots;

    double omega = 0.0;
    double tau = 0.0;
    std::vector<Complex> root_values;

    double rho_prime = 0.0;
    double mass_defect = 0.0;     // |total arbitrary mass - 1| before renormalizing
    double pibar_gap = 0.0;       // || (1/rho') sum pi1(n) - pi_bar ||_inf
    double departure_rate = 0.0;  // sum_{n>=1} pi1(n) L1 e
    RowVector cond_busy_phase;    // (1/rho') sum_{n>=1} pi1(n)
};

EpochDistributions pre_arrival_distribution(const BoundarySolution& solution,
                                            const QueueModel& model, int n_report);

// Extends a pre-arrival result with the arbitrary-epoch block.
void arbitrary_distribution(EpochDistributions& dist, const BoundarySolution& solution,
                            const QueueModel& model, const KernelSet& kernels);

// Post-departure and pre-service blocks (requires the arbitrary block).
void departure_epochs(EpochDistributions& dist, const QueueModel& model);

struct Measures {
    double L_s = 0.0;
    double L_q = 0.0;
    double W_s = 0.0;
    double W_s_little = 0.0;
    double rho_prime = 0.0;
    double E_B = 0.0;
    double E_I = 0.0;
    RowVector cond_busy_phase;
};

Measures performance_measures(const EpochDistributions& dist, const BoundarySolution& solution,
                              const QueueModel& model);

// LST of the sojourn-time law at s (Re s >= 0); W*(0) = 1.
Complex waiting_time_lst(const BoundarySolution& solution, const QueueModel& model, Complex s);

struct SolveDiagnostics {
    double boundary_residual = 0.0;
    double boundary_condition = 0.0;
    double kernel_tail_mass = 0.0;
    long kernel_clipped = 0;
    double kernel_worst_negative = 0.0;
    int kernel_n_max = 0;
    int winding = 0;
    double root_residual = 0.0;
    double pre_arrival_mass_error = 0.0;
    double arbitrary_mass_defect = 0.0;
    double little_gap = 0.0;  // |W_s - L_s/lambda| / W_s
    double pibar_gap = 0.0;
    double departure_rate_gap = 0.0;  // |D - mu* rho'| / (mu* rho')
};

struct SolveOptions {
    ModelOptions model;
    KernelOptions kernels;
    RootOptions roots;
    int n_report = 10;
};

struct SolveResult {
    QueueModel model;
    RootSet roots;
    KernelSet kernels;
    BoundarySolution boundary;
    EpochDistributions dist;
    Measures measures;
    SolveDiagnostics diag;
};

// Full pipeline: validate -> roots -> kernels -> boundary -> distributions
// -> measures, with diagnostics.
SolveResult solve_model(const ModelDescription& raw, const SolveOptions& options = {});
SolveResult solve_model(const QueueModel& model, SolveOptions options = {});

}  // namespace qvsolve
