#pragma once

#include <optional>

#include "qvsolve/model.hpp"
#include "qvsolve/types.hpp"

namespace qvsolve {

// Matrix generating function of the number of services completed across an
// inter-event window drawn from a phase-type law (alpha, T), evaluated by one
// complex linear solve of size m*eta:
//   X(z) = (I_m (x) alpha) (L(z) (+) T)^{-1} (I_m (x) T e).
class CountingTransform {
public:
    CountingTransform(const MarkovianService& service, const RowVector& alpha, const Matrix& T);

    ComplexMatrix value(Complex z) const;
    ComplexMatrix derivative(Complex z) const;
    ComplexMatrix second_derivative(Complex z) const;

    Eigen::Index service_phases() const { return m_; }

private:
    // Solves (M - zB) X = rhs_cols and projects with (I (x) alpha).
    struct Factored;
    ComplexMatrix project(const ComplexMatrix& block) const;
    ComplexMatrix resolve(Complex z, const ComplexMatrix& rhs) const;
    ComplexMatrix apply_b(const ComplexMatrix& x) const;

    Eigen::Index m_;
    Eigen::Index eta_;
    RowVector alpha_;
    Matrix big_m_;   // -(L0 (+) T)
    Matrix big_b_;   // L1 (x) I
    Matrix rhs_;     // I (x) T0
};

// S(z) for the queue's arrival law.
ComplexMatrix s_matrix_of_z(const QueueModel& model, Complex z);

// Truncated coefficient sequence S_0..S_n of a counting transform, computed
// by the resolvent power recursion (pure linear solves).  Also used for the
// V and C families with the excess laws substituted.
MatrixSequence counting_coefficients(const MarkovianService& service, const RowVector& alpha,
                                     const Matrix& T, int n_max);

// S_0..S_{n_max} for the queue's arrival law.
MatrixSequence s_coefficients(const QueueModel& model, int n_max);

// Omega family from S by algebraic inversion of the renewal relation.
MatrixSequence omega_coefficients(const QueueModel& model, const MatrixSequence& s_seq);

struct KernelOptions {
    double tail_tolerance = 1e-12;
    int initial_n_max = 64;
    int n_cap = 4096;
    // Largest geometric weight the boundary sums will use (max of omega and
    // the root moduli); truncation also certifies x^n/(1-x)^2 below the tail
    // tolerance for this x.
    std::optional<double> geometric_hint;
};

struct KernelSet {
    int n_max = 0;
    // Unstarred families indexed 0..n_max; starred families indexed
    // 1..n_max with entry [0] kept zero.
    MatrixSequence S, Omega;
    MatrixSequence V, Vstar, Delta, Deltastar;
    MatrixSequence C, Cstar, Phi, Phistar;
    double tail_mass = 0.0;    // worst deficit across base families
    long clipped_entries = 0;  // negative roundoff entries clipped to zero
    double worst_negative = 0.0;
};

KernelSet compute_kernels(const QueueModel& model, const KernelOptions& options = {});

// Term-wise evaluation of a coefficient sequence sum_n X_n x^n and its first
// two derivatives at a real point.
Matrix series_value(const MatrixSequence& seq, double x);
Matrix series_derivative(const MatrixSequence& seq, double x);
Matrix series_second_derivative(const MatrixSequence& seq, double x);

}  // namespace qvsolve
