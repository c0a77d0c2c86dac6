#include "qvsolve/counting.hpp"

#include <cmath>

#include "qvsolve/errors.hpp"

namespace qvsolve {

MatrixSequence counting_probabilities(const MarkovianService& service, int n_max, double t,
                                      double tolerance) {
    const Eigen::Index m = service.phases();
    if (t < 0.0) fail(ErrorKind::BadConfig, "time must be nonnegative");
    if (n_max < 0) fail(ErrorKind::BadConfig, "n_max must be nonnegative");

    MatrixSequence P(static_cast<size_t>(n_max) + 1, Matrix::Zero(m, m));
    if (t == 0.0) {
        P[0] = Matrix::Identity(m, m);
        return P;
    }

    const double theta =
        service.L0.diagonal().cwiseAbs().maxCoeff() + service.L1.rowwise().sum().maxCoeff();
    const Matrix A = Matrix::Identity(m, m) + service.L0 / theta;
    const Matrix B = service.L1 / theta;
    const double mu = theta * t;

    // U_k(n) recursion with Poisson(theta t) weights; terminate once the
    // remaining Poisson mass drops below the tolerance.
    MatrixSequence U(static_cast<size_t>(n_max) + 1, Matrix::Zero(m, m));
    U[0] = Matrix::Identity(m, m);

    const long k_cap = static_cast<long>(mu + 12.0 * std::sqrt(mu) + 60.0);
    double log_mu = std::log(mu);
    double cumulative = 0.0;
    for (long k = 0;; ++k) {
        double log_w = static_cast<double>(k) * log_mu - mu - std::lgamma(static_cast<double>(k) + 1.0);
        double w = std::exp(log_w);
        cumulative += w;
        if (w > 0.0) {
            for (int n = 0; n <= n_max; ++n) P[static_cast<size_t>(n)] += w * U[static_cast<size_t>(n)];
        }
        if (1.0 - cumulative < tolerance) break;
        if (k >= k_cap)
            fail(ErrorKind::TailBoundExceeded,
                 "Poisson series truncation cannot reach requested tolerance");
        for (int n = n_max; n >= 0; --n) {
            Matrix next = U[static_cast<size_t>(n)] * A;
            if (n > 0) next += U[static_cast<size_t>(n) - 1] * B;
            U[static_cast<size_t>(n)] = std::move(next);
        }
    }
    return P;
}

}  // namespace qvsolve
