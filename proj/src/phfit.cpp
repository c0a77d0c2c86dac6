#include "qvsolve/phfit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "qvsolve/errors.hpp"

namespace qvsolve {

double FitTarget::moment(int k) const {
    double kk = static_cast<double>(k);
    return std::exp(kk * scale + 0.5 * kk * kk * shape * shape);
}

double FitTarget::density(double x) const {
    if (x <= 0.0) return 0.0;
    double z = (std::log(x) - scale) / shape;
    return std::exp(-0.5 * z * z) / (x * shape * std::sqrt(2.0 * std::numbers::pi));
}

std::vector<double> target_moments(const FitTarget& target, int count) {
    if (count > 25) fail(ErrorKind::Overflow, "moment count above 25 not supported");
    std::vector<double> out;
    out.reserve(static_cast<size_t>(count));
    for (int k = 1; k <= count; ++k) {
        double mk = target.moment(k);
        if (!std::isfinite(mk) || mk > 1e300)
            fail(ErrorKind::Overflow, "target moment overflows double range");
        out.push_back(mk);
    }
    return out;
}

PadeApproximant pade_lst(const std::vector<double>& moments, int p, int q) {
    const int need = p + q;
    if (static_cast<int>(moments.size()) < need)
        fail(ErrorKind::BadConfig, "not enough moments for the requested Pade order");

    // Series coefficients of the LST: c_0 = 1, c_k = (-1)^k mu_k / k!.
    std::vector<double> c(static_cast<size_t>(need) + 1);
    c[0] = 1.0;
    double factorial = 1.0;
    for (int k = 1; k <= need; ++k) {
        factorial *= static_cast<double>(k);
        c[static_cast<size_t>(k)] =
            ((k % 2 == 0) ? 1.0 : -1.0) * moments[static_cast<size_t>(k - 1)] / factorial;
    }

    // b_0 = 1; sum_{j=0..q} b_j c_{k-j} = 0 for k = p+1..p+q.
    Matrix A = Matrix::Zero(q, q);
    Vector rhs = Vector::Zero(q);
    for (int r = 0; r < q; ++r) {
        int k = p + 1 + r;
        rhs(r) = -c[static_cast<size_t>(k)];
        for (int j = 1; j <= q; ++j) {
            int idx = k - j;
            if (idx >= 0) A(r, j - 1) = c[static_cast<size_t>(idx)];
        }
    }
    Eigen::FullPivLU<Matrix> lu(A);
    if (!lu.isInvertible()) fail(ErrorKind::SingularPadeSystem, "Pade linear system is singular");
    Vector bv = lu.solve(rhs);

    PadeApproximant out;
    out.denominator.assign(static_cast<size_t>(q) + 1, 0.0);
    out.denominator[0] = 1.0;
    for (int j = 1; j <= q; ++j) out.denominator[static_cast<size_t>(j)] = bv(j - 1);
    out.numerator.assign(static_cast<size_t>(p) + 1, 0.0);
    for (int k = 0; k <= p; ++k) {
        double a = 0.0;
        for (int j = 0; j <= std::min(k, q); ++j)
            a += out.denominator[static_cast<size_t>(j)] * c[static_cast<size_t>(k - j)];
        out.numerator[static_cast<size_t>(k)] = a;
    }
    return out;
}

std::vector<double> rates_from_denominator(const PadeApproximant& pade) {
    const int q = static_cast<int>(pade.denominator.size()) - 1;
    if (q < 1) fail(ErrorKind::BadConfig, "denominator must have positive degree");

    // Companion matrix of the monic reversal.
    double lead = pade.denominator[static_cast<size_t>(q)];
    if (lead == 0.0) fail(ErrorKind::ComplexDenominatorRoots, "denominator degree collapsed");
    Matrix comp = Matrix::Zero(q, q);
    for (int i = 1; i < q; ++i) comp(i, i - 1) = 1.0;
    for (int i = 0; i < q; ++i) comp(0, i) = -pade.denominator[static_cast<size_t>(q - 1 - i)] / lead;
    Eigen::EigenSolver<Matrix> es(comp);

    std::vector<double> rates;
    for (int i = 0; i < q; ++i) {
        Complex r = es.eigenvalues()(i);
        if (std::abs(r.imag()) > 1e-9 * std::max(1.0, std::abs(r.real())))
            fail(ErrorKind::ComplexDenominatorRoots,
                 "denominator roots are not all real; no acyclic representation");
        if (r.real() >= 0.0)
            fail(ErrorKind::ComplexDenominatorRoots,
                 "denominator roots are not all negative; no acyclic representation");
        rates.push_back(-r.real());
    }
    std::sort(rates.begin(), rates.end());
    return rates;
}

namespace {

Matrix bidiagonal_subgenerator(const std::vector<double>& rates) {
    const Eigen::Index n = static_cast<Eigen::Index>(rates.size());
    Matrix T = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        T(i, i) = -rates[static_cast<size_t>(i)];
        if (i + 1 < n) T(i, i + 1) = rates[static_cast<size_t>(i)];
    }
    return T;
}

// Moment coefficient columns: mu_i^PH(alpha) = alpha * col_i with
// col_i = (-1)^i i! T^{-i} e.
Matrix moment_columns(const Matrix& T, int count) {
    const Eigen::Index n = T.rows();
    Matrix cols(n, count);
    Eigen::PartialPivLU<Matrix> lu(T);
    Vector v = Vector::Ones(n);
    double factorial = 1.0;
    for (int i = 1; i <= count; ++i) {
        v = lu.solve(v);
        factorial *= static_cast<double>(i);
        double sign = (i % 2 == 0) ? 1.0 : -1.0;
        cols.col(i - 1) = sign * factorial * v;
    }
    return cols;
}

double quad_objective(const Matrix& cols, const Vector& mu, const Vector& w,
                      const RowVector& alpha) {
    double acc = 0.0;
    for (int i = 0; i < cols.cols(); ++i) {
        double diff = mu(i) - (alpha * cols.col(i)).value();
        acc += w(i) * diff * diff;
    }
    return acc;
}

}  // namespace

double fit_objective(const FitTarget& target, const std::vector<double>& rates,
                     const Vector& weights, const RowVector& alpha) {
    Matrix T = bidiagonal_subgenerator(rates);
    const int count = static_cast<int>(weights.size());
    Matrix cols = moment_columns(T, count);
    Vector mu(count);
    for (int i = 1; i <= count; ++i) mu(i - 1) = target.moment(i);
    return quad_objective(cols, mu, weights, alpha);
}

AcyclicPHFit fit_alpha(const FitTarget& target, const std::vector<double>& rates,
                       const Vector& weights) {
    const Eigen::Index n = static_cast<Eigen::Index>(rates.size());
    if (n < 1) fail(ErrorKind::BadConfig, "at least one rate required");
    if (weights.minCoeff() < 0.0) fail(ErrorKind::BadConfig, "weights must be nonnegative");
    for (size_t i = 0; i + 1 < rates.size(); ++i)
        if (!(rates[i] > 0.0) || rates[i] > rates[i + 1] + 1e-15)
            fail(ErrorKind::BadConfig, "rates must be positive and ascending");

    Matrix T = bidiagonal_subgenerator(rates);
    const int count = static_cast<int>(weights.size());
    Matrix cols = moment_columns(T, count);
    Vector mu(count);
    for (int i = 1; i <= count; ++i) mu(i - 1) = target.moment(i);

    RowVector best = RowVector::Zero(n);
    best(n - 1) = 1.0;
    double best_obj = quad_objective(cols, mu, weights, best);

    // Dense simplex grid, step 1e-3 (the objective is quadratic in alpha, so
    // the grid certifies the basin; exact refinement follows).
    const int steps = 1000;
    if (n == 1) {
        // single point
    } else if (n == 2) {
        for (int i = 0; i <= steps; ++i) {
            RowVector a(2);
            a << static_cast<double>(i) / steps, 1.0 - static_cast<double>(i) / steps;
            double obj = quad_objective(cols, mu, weights, a);
            if (obj < best_obj) {
                best_obj = obj;
                best = a;
            }
        }
    } else if (n == 3) {
        for (int i = 0; i <= steps; ++i) {
            for (int j = 0; j <= steps - i; ++j) {
                RowVector a(3);
                a << static_cast<double>(i) / steps, static_cast<double>(j) / steps,
                    static_cast<double>(steps - i - j) / steps;
                double obj = quad_objective(cols, mu, weights, a);
                if (obj < best_obj) {
                    best_obj = obj;
                    best = a;
                }
            }
        }
    } else {
        fail(ErrorKind::BadConfig, "canonical fits above order 3 are not supported");
    }

    // Exact refinement: equality-constrained least squares on every face of
    // the simplex; feasible stationary points compete with the grid point.
    const int full = static_cast<int>(n);
    for (int mask = 1; mask < (1 << full); ++mask) {
        std::vector<int> free_idx;
        for (int i = 0; i < full; ++i)
            if (mask & (1 << i)) free_idx.push_back(i);
        const int f = static_cast<int>(free_idx.size());
        Matrix cf(f, count);
        for (int r = 0; r < f; ++r) cf.row(r) = cols.row(free_idx[static_cast<size_t>(r)]);
        // KKT: [2 Cf W Cf^T, e; e^T, 0] [alpha_f; lam] = [2 Cf W mu; 1]
        Matrix kkt = Matrix::Zero(f + 1, f + 1);
        Vector rhs = Vector::Zero(f + 1);
        Matrix wdiag = weights.asDiagonal();
        kkt.topLeftCorner(f, f) = 2.0 * cf * wdiag * cf.transpose();
        kkt.topRightCorner(f, 1).setOnes();
        kkt.bottomLeftCorner(1, f).setOnes();
        rhs.head(f) = 2.0 * cf * wdiag * mu;
        rhs(f) = 1.0;
        Eigen::FullPivLU<Matrix> lu(kkt);
        if (!lu.isInvertible()) continue;
        Vector sol = lu.solve(rhs);
        if (sol.head(f).minCoeff() < -1e-12) continue;
        RowVector a = RowVector::Zero(n);
        for (int r = 0; r < f; ++r) a(free_idx[static_cast<size_t>(r)]) = std::max(0.0, sol(r));
        a /= a.sum();
        double obj = quad_objective(cols, mu, weights, a);
        if (obj < best_obj) {
            best_obj = obj;
            best = a;
        }
    }

    AcyclicPHFit fit;
    fit.rates = rates;
    fit.alpha = best;
    fit.weights = weights;
    fit.objective = best_obj;
    return fit;
}

PhaseTypeDistribution AcyclicPHFit::ph() const {
    PhaseTypeDistribution out;
    out.alpha = alpha;
    out.T = bidiagonal_subgenerator(rates);
    out.exit = -out.T.rowwise().sum();
    return out;
}

double service_lag1_correlation(const MarkovianService& service) {
    const Eigen::Index m = service.phases();
    const Matrix neg_l0 = -service.L0;
    Eigen::PartialPivLU<Matrix> lu(neg_l0);
    Matrix P = lu.solve(service.L1);  // phase chain embedded at completions

    // Stationary interval-start vector: pi_bar L1 / mu*.
    RowVector phi = service.pi_bar * service.L1 / service.mu_star;
    const double mu2 = service.mu_star * service.mu_star;

    Vector inv_e = lu.solve(ones(m));
    Vector second = lu.solve(inv_e);               // (-L0)^{-2} e
    Vector cross = lu.solve(P * inv_e);            // (-L0)^{-1} P (-L0)^{-1} e

    double denom = 2.0 * mu2 * (phi * second).value() - 1.0;
    double numer = mu2 * (phi * cross).value() - 1.0;
    if (std::abs(denom) < 1e-12)
        fail(ErrorKind::DegenerateVariance, "interval variance vanishes (Poisson-like process)");
    return numer / denom;
}

}  // namespace qvsolve
