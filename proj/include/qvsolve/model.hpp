#pragma once

#include <string>
#include <vector>

#include "qvsolve/types.hpp"

namespace qvsolve {

// Phase-type (or matrix-exponential) inter-event law with initial row vector
// `alpha` and subgenerator `T`.  `exit` is T0 = -T*e.
//
// A proper phase-type law has nonnegative exit rates.  Inputs with a
// positive row sum in T are accepted as matrix-exponential laws: every
// transform-domain computation stays well defined, but such a law cannot be
// sampled (see QueueModel::arrival_proper).
struct PhaseTypeDistribution {
    RowVector alpha;
    Matrix T;
    Vector exit;

    Eigen::Index order() const { return T.rows(); }
    double mean() const;  // -alpha T^{-1} e

    // Density alpha e^{Tx} T0 (signed for improper laws).
    double density(double x) const;
    // Survival function alpha e^{Tx} e.
    double survival(double x) const;
};

// Markovian service process (L0, L1): L0 carries phase transitions without
// service completion, L1 transitions that complete a service.
struct MarkovianService {
    Matrix L0;
    Matrix L1;
    RowVector pi_bar;  // stationary vector of L0+L1
    double mu_star;    // fundamental service rate pi_bar L1 e

    Eigen::Index phases() const { return L0.rows(); }
};

struct VacationModel {
    double gamma;  // vacation completion rate
};

// How the residual-vacation-plus-one-vacation window (an Erlang-2 clock) is
// folded into the excess inter-arrival law.  `FreshErlang` uses the exact
// Erlang-2 exit vector (0, gamma); `AveragedExit` spreads the exit rate
// evenly over both stages (gamma/2, gamma/2), which matches the printed
// closed forms the reference tables were produced with.
enum class ErlangExitConvention { FreshErlang, AveragedExit };

struct ModelOptions {
    bool require_stable = true;
    double stability_margin = 1e-9;
    ErlangExitConvention erlang_exit = ErlangExitConvention::AveragedExit;
};

struct QueueModel {
    PhaseTypeDistribution arrival;
    MarkovianService service;
    VacationModel vacation;

    double lambda = 0.0;  // arrival rate
    double rho = 0.0;     // traffic intensity lambda / mu_star

    // Race probabilities between the vacation clock(s) and (residual)
    // inter-arrival times.
    double omega = 0.0;   // P(residual vacation outlasts an inter-arrival)
    double tau = 0.0;     // same with the equilibrium inter-arrival law
    double omega2 = 0.0;  // two-stage vacation window variants
    double tau2 = 0.0;

    PhaseTypeDistribution a_plus;       // excess inter-arrival law, order eta
    PhaseTypeDistribution a_plus_plus;  // two-stage excess law, order 2*eta
    double lambda1 = 0.0;               // 1 / E[A+]
    double lambda2 = 0.0;               // 1 / E[A++]

    bool arrival_proper = true;
    ErlangExitConvention erlang_exit = ErlangExitConvention::AveragedExit;
    std::vector<std::string> warnings;

    Eigen::Index arrival_order() const { return arrival.order(); }
    Eigen::Index service_phases() const { return service.phases(); }
};

// Raw model description prior to validation.
struct ModelDescription {
    RowVector alpha;
    Matrix T;
    Matrix L0;
    Matrix L1;
    double gamma = 0.0;
};

// Validates the description and computes every derived quantity.
// Throws SolverError on invalid input; rho >= 1 is rejected unless
// options.require_stable is false.
QueueModel validate_model(const ModelDescription& raw, const ModelOptions& options = {});

// (omega, tau) for an arrival law (alpha, T) and vacation rate gamma.
std::pair<double, double> omega_tau(const PhaseTypeDistribution& arrival, double gamma,
                                    double lambda);

// Excess inter-arrival law A+ (Theorem: same subgenerator, reweighted alpha).
PhaseTypeDistribution excess_arrival_ph(const PhaseTypeDistribution& arrival, double gamma,
                                        double omega);

struct DoubleExcessResult {
    PhaseTypeDistribution law;  // order 2*eta, subgenerator T (x) I2
    double omega2 = 0.0;
    double tau2 = 0.0;
};

// Two-stage excess law A++ together with (omega2, tau2).
DoubleExcessResult double_excess_ph(const PhaseTypeDistribution& arrival, double gamma,
                                    double lambda, ErlangExitConvention convention);

// Collapses the two-stage representation (order 2*eta, T (x) I2) onto the
// base arrival phases: the stage coordinate is inert under T (x) I2, so the
// absorption law is phase-type of order eta with the same T.
RowVector collapse_double_excess(const PhaseTypeDistribution& law);

// Laplace-Stieltjes transform of a phase-type law at s: alpha (sI-T)^{-1} T0.
double ph_lst(const PhaseTypeDistribution& ph, double s);

}  // namespace qvsolve
