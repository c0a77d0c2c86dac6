#pragma once

#include <vector>

#include "qvsolve/kernels.hpp"
#include "qvsolve/model.hpp"
#include "qvsolve/types.hpp"

namespace qvsolve {

// The m zeros of det[Iz - S(z)] inside the open unit disk.
struct RootSet {
    std::vector<Complex> roots;  // descending modulus; conjugate pairs adjacent
    std::vector<int> pairing;    // index of the conjugate partner; i itself when real
    double residual = 0.0;       // max |det(I g - S(g))| over the polished roots

    int count() const { return static_cast<int>(roots.size()); }
};

// det(Iz - S(z)).
Complex characteristic_value(const QueueModel& model, Complex z);

struct RootOptions {
    int circle_points = 512;
    double polish_target = 1e-12;
    int max_newton_iterations = 100;
    double winding_radius = 1.0 - 1e-6;
    double separation = 1e-8;
};

RootSet find_inner_roots(const QueueModel& model, const RootOptions& options = {});

// Winding number of det(Iz - S(z)) along |z| = radius (adaptive argument
// tracking).
int winding_number(const QueueModel& model, double radius, int initial_points = 512);

enum class ApproximationMode { Light, Heavy, NearRho };

// Scalar one-root approximation of the dominant characteristic root from the
// second-order expansion of the characteristic equation.  `rho1` is used for
// NearRho only.
double approximation_root(const QueueModel& model, ApproximationMode mode, double rho1 = 0.0);

struct TailApproximation {
    int order = 1;
    std::vector<Complex> z_list;          // dominant roots, descending modulus
    ComplexMatrix k_coefficients;         // matching residue rows (order x m)
    int n_epsilon = 0;                    // switchover level
    double epsilon = 0.0;
};

// Geometric tail approximation of the busy pre-arrival distribution
// pi1^-(n)_j = sum_i k_ij g_i^n from the `order` largest-modulus roots
// (conjugate pairs kept whole).  `k` holds the residue rows of the full
// boundary solution, aligned with `roots.roots`.
TailApproximation tail_approximation(const ComplexMatrix& k, const RootSet& roots, int order,
                                     double epsilon);

}  // namespace qvsolve
