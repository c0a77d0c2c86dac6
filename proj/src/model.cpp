#include "qvsolve/model.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <sstream>

#include "qvsolve/errors.hpp"

namespace qvsolve {

namespace {

constexpr double kStructureTol = 1e-12;

void require_square(const Matrix& M, const char* name) {
    if (M.rows() == 0 || M.rows() != M.cols()) {
        std::ostringstream os;
        os << name << " must be square and nonempty, got " << M.rows() << "x" << M.cols();
        fail(ErrorKind::DimensionMismatch, os.str());
    }
}

// Strong connectivity of the directed graph induced by the off-diagonal
// nonzero pattern of M (diagonal ignored).
bool strongly_connected(const Matrix& M) {
    const Eigen::Index n = M.rows();
    if (n == 1) return true;
    auto reachable = [&](bool transpose) {
        std::vector<bool> seen(static_cast<size_t>(n), false);
        std::vector<Eigen::Index> stack{0};
        seen[0] = true;
        while (!stack.empty()) {
            Eigen::Index i = stack.back();
            stack.pop_back();
            for (Eigen::Index j = 0; j < n; ++j) {
                if (j == i || seen[static_cast<size_t>(j)]) continue;
                double w = transpose ? M(j, i) : M(i, j);
                if (w > kStructureTol) {
                    seen[static_cast<size_t>(j)] = true;
                    stack.push_back(j);
                }
            }
        }
        for (bool s : seen)
            if (!s) return false;
        return true;
    };
    return reachable(false) && reachable(true);
}

RowVector stationary_vector(const Matrix& generator) {
    const Eigen::Index m = generator.rows();
    // Solve pi L = 0, pi e = 1 by replacing one column with the
    // normalization equation.
    Matrix A = generator.transpose();
    A.row(m - 1).setOnes();
    Vector rhs = Vector::Zero(m);
    rhs(m - 1) = 1.0;
    Eigen::FullPivLU<Matrix> lu(A);
    if (!lu.isInvertible()) fail(ErrorKind::SingularMatrix, "stationary vector system singular");
    Vector pi = lu.solve(rhs);
    return pi.transpose();
}

}  // namespace

double PhaseTypeDistribution::mean() const {
    Vector x = T.partialPivLu().solve(ones(order()));
    return -(alpha * x).value();
}

double PhaseTypeDistribution::density(double x) const {
    Matrix E = (T * x).exp();
    return (alpha * E * exit).value();
}

double PhaseTypeDistribution::survival(double x) const {
    Matrix E = (T * x).exp();
    return (alpha * E * ones(order())).value();
}

double ph_lst(const PhaseTypeDistribution& ph, double s) {
    Matrix A = s * Matrix::Identity(ph.order(), ph.order()) - ph.T;
    Vector x = A.partialPivLu().solve(ph.exit);
    return (ph.alpha * x).value();
}

std::pair<double, double> omega_tau(const PhaseTypeDistribution& arrival, double gamma,
                                    double lambda) {
    const Eigen::Index eta = arrival.order();
    Matrix A = arrival.T - gamma * Matrix::Identity(eta, eta);
    Eigen::PartialPivLU<Matrix> lu(A);
    // (T - gamma I) is nonsingular whenever gamma exceeds the largest row sum
    // of T; a singular solve here signals invalid input.
    Matrix check = lu.reconstructedMatrix();
    if (!check.allFinite() || std::abs(lu.determinant()) < 1e-300)
        fail(ErrorKind::SingularMatrix, "(T - gamma I) numerically singular");

    Vector x = lu.solve(ones(eta));
    double omega = 1.0 + gamma * (arrival.alpha * x).value();

    Vector tinv_e = arrival.T.partialPivLu().solve(ones(eta));
    Vector y = lu.solve(tinv_e);
    double tau = 1.0 - lambda * gamma * (arrival.alpha * y).value();
    return {omega, tau};
}

PhaseTypeDistribution excess_arrival_ph(const PhaseTypeDistribution& arrival, double gamma,
                                        double omega) {
    const Eigen::Index eta = arrival.order();
    Matrix A = gamma * Matrix::Identity(eta, eta) - arrival.T;  // = -(T - gamma I)
    RowVector alpha1 =
        (gamma / (1.0 - omega)) * A.transpose().partialPivLu().solve(arrival.alpha.transpose()).transpose();
    PhaseTypeDistribution out;
    out.alpha = alpha1;
    out.T = arrival.T;
    out.exit = arrival.exit;
    return out;
}

DoubleExcessResult double_excess_ph(const PhaseTypeDistribution& arrival, double gamma,
                                    double lambda, ErlangExitConvention convention) {
    const Eigen::Index eta = arrival.order();
    const Eigen::Index n2 = 2 * eta;

    // Erlang-2 clock: beta = [1, 0], U = [[-g, g], [0, -g]].  The exit-weight
    // vector u0 selects the convention: the exact exit (0, g) or the averaged
    // (g/2, g/2) used by the printed closed forms.
    Vector u0(2);
    if (convention == ErlangExitConvention::FreshErlang)
        u0 << 0.0, gamma;
    else
        u0 << gamma / 2.0, gamma / 2.0;

    Matrix U(2, 2);
    U << -gamma, gamma, 0.0, -gamma;

    // M = T (+) U = T (x) I2 + I_eta (x) U.
    Matrix M = Matrix::Zero(n2, n2);
    for (Eigen::Index i = 0; i < eta; ++i)
        for (Eigen::Index j = 0; j < eta; ++j)
            for (Eigen::Index k = 0; k < 2; ++k) M(2 * i + k, 2 * j + k) += arrival.T(i, j);
    for (Eigen::Index i = 0; i < eta; ++i)
        for (Eigen::Index k = 0; k < 2; ++k)
            for (Eigen::Index l = 0; l < 2; ++l) M(2 * i + k, 2 * i + l) += U(k, l);

    Eigen::PartialPivLU<Matrix> lu(M);

    RowVector ab = RowVector::Zero(n2);  // alpha (x) beta with beta = [1, 0]
    for (Eigen::Index i = 0; i < eta; ++i) ab(2 * i) = arrival.alpha(i);

    Vector e_u0(n2);
    for (Eigen::Index i = 0; i < eta; ++i) {
        e_u0(2 * i) = u0(0);
        e_u0(2 * i + 1) = u0(1);
    }
    double omega2 = 1.0 + (ab * lu.solve(e_u0)).value();

    Vector tinv_e = arrival.T.partialPivLu().solve(ones(eta));
    Vector t_u0(n2);
    for (Eigen::Index i = 0; i < eta; ++i) {
        t_u0(2 * i) = tinv_e(i) * u0(0);
        t_u0(2 * i + 1) = tinv_e(i) * u0(1);
    }
    double tau2 = 1.0 - lambda * (ab * lu.solve(t_u0)).value();

    // alpha2 = (1/(1-omega2)) (alpha (x) beta) (-M)^{-1} (I_eta (x) diag(u0))
    RowVector row = M.transpose().partialPivLu().solve(ab.transpose()).transpose();
    RowVector alpha2 = RowVector::Zero(n2);
    for (Eigen::Index i = 0; i < eta; ++i) {
        alpha2(2 * i) = -row(2 * i) * u0(0);
        alpha2(2 * i + 1) = -row(2 * i + 1) * u0(1);
    }
    alpha2 /= (1.0 - omega2);

    DoubleExcessResult out;
    out.omega2 = omega2;
    out.tau2 = tau2;
    out.law.alpha = alpha2;
    // T2 = T (x) I2 with interleaved stage index.
    Matrix T2 = Matrix::Zero(n2, n2);
    for (Eigen::Index i = 0; i < eta; ++i)
        for (Eigen::Index j = 0; j < eta; ++j)
            for (Eigen::Index k = 0; k < 2; ++k) T2(2 * i + k, 2 * j + k) = arrival.T(i, j);
    out.law.T = T2;
    out.law.exit = -T2.rowwise().sum();
    return out;
}

RowVector collapse_double_excess(const PhaseTypeDistribution& law) {
    const Eigen::Index eta = law.order() / 2;
    RowVector out = RowVector::Zero(eta);
    for (Eigen::Index i = 0; i < eta; ++i) out(i) = law.alpha(2 * i) + law.alpha(2 * i + 1);
    return out;
}

QueueModel validate_model(const ModelDescription& raw, const ModelOptions& options) {
    require_square(raw.T, "arrival.T");
    require_square(raw.L0, "service.L0");
    require_square(raw.L1, "service.L1");
    const Eigen::Index eta = raw.T.rows();
    const Eigen::Index m = raw.L0.rows();
    if (raw.alpha.size() != eta)
        fail(ErrorKind::DimensionMismatch, "arrival.alpha length does not match T dimension");
    if (raw.L1.rows() != m || raw.L1.cols() != m)
        fail(ErrorKind::DimensionMismatch, "service.L1 dimension does not match L0");
    if (!(raw.gamma > 0.0)) fail(ErrorKind::BadConfig, "vacation rate must be positive");

    QueueModel model;
    model.vacation.gamma = raw.gamma;
    model.erlang_exit = options.erlang_exit;

    // --- arrival law ---
    if (raw.alpha.minCoeff() < -kStructureTol)
        fail(ErrorKind::NotSubgenerator, "arrival.alpha has negative entries");
    if (std::abs(raw.alpha.sum() - 1.0) > 1e-12)
        fail(ErrorKind::NotSubgenerator, "arrival.alpha does not sum to 1");
    for (Eigen::Index i = 0; i < eta; ++i) {
        if (!(raw.T(i, i) < 0.0))
            fail(ErrorKind::NotSubgenerator, "arrival.T diagonal must be strictly negative");
        for (Eigen::Index j = 0; j < eta; ++j)
            if (i != j && raw.T(i, j) < -kStructureTol)
                fail(ErrorKind::NotSubgenerator, "arrival.T off-diagonal must be nonnegative");
    }
    model.arrival.alpha = raw.alpha;
    model.arrival.T = raw.T;
    model.arrival.exit = -raw.T.rowwise().sum();
    model.arrival_proper = model.arrival.exit.minCoeff() >= -1e-10;
    if (!model.arrival_proper) {
        std::ostringstream os;
        os << "arrival.T has positive row sums (min exit rate "
           << model.arrival.exit.minCoeff()
           << "); the law is matrix-exponential, not phase-type, and cannot be sampled";
        model.warnings.push_back(os.str());
    }
    Eigen::FullPivLU<Matrix> tlu(raw.T);
    if (!tlu.isInvertible()) fail(ErrorKind::NotSubgenerator, "arrival.T is singular");

    double mean_a = model.arrival.mean();
    if (!(mean_a > 0.0))
        fail(ErrorKind::NotSubgenerator, "arrival law has nonpositive mean inter-arrival time");
    model.lambda = 1.0 / mean_a;

    // --- service process ---
    for (Eigen::Index i = 0; i < m; ++i) {
        if (!(raw.L0(i, i) < 0.0))
            fail(ErrorKind::NotGenerator, "service.L0 diagonal must be strictly negative");
        for (Eigen::Index j = 0; j < m; ++j) {
            if (i != j && raw.L0(i, j) < -kStructureTol)
                fail(ErrorKind::NotGenerator, "service.L0 off-diagonal must be nonnegative");
            if (raw.L1(i, j) < -kStructureTol)
                fail(ErrorKind::NotGenerator, "service.L1 must be nonnegative");
        }
    }
    Matrix L = raw.L0 + raw.L1;
    if (L.rowwise().sum().cwiseAbs().maxCoeff() > 1e-9)
        fail(ErrorKind::NotGenerator, "(L0 + L1) row sums must vanish");
    if (!strongly_connected(L)) fail(ErrorKind::Reducible, "L0 + L1 is reducible");

    model.service.L0 = raw.L0;
    model.service.L1 = raw.L1;
    model.service.pi_bar = stationary_vector(L);
    model.service.mu_star = (model.service.pi_bar * raw.L1 * ones(m)).value();
    if (!(model.service.mu_star > 0.0))
        fail(ErrorKind::NotGenerator, "fundamental service rate must be positive");

    model.rho = model.lambda / model.service.mu_star;
    if (options.require_stable && model.rho >= 1.0 - options.stability_margin) {
        std::ostringstream os;
        os << "traffic intensity rho = " << model.rho << " >= 1; queue unstable";
        fail(ErrorKind::Unstable, os.str());
    }

    // --- vacation race probabilities and excess laws ---
    auto [omega, tau] = omega_tau(model.arrival, raw.gamma, model.lambda);
    model.omega = omega;
    model.tau = tau;
    if (!(omega > 0.0 && omega < 1.0)) {
        std::ostringstream os;
        os << "omega = " << omega << " outside (0,1)";
        fail(ErrorKind::NotSubgenerator, os.str());
    }
    if (!(tau > 0.0 && tau < 1.0)) {
        std::ostringstream os;
        os << "tau = " << tau << " outside (0,1)";
        fail(ErrorKind::NotSubgenerator, os.str());
    }

    model.a_plus = excess_arrival_ph(model.arrival, raw.gamma, omega);
    model.lambda1 = 1.0 / model.a_plus.mean();

    DoubleExcessResult dx = double_excess_ph(model.arrival, raw.gamma, model.lambda,
                                             options.erlang_exit);
    model.omega2 = dx.omega2;
    model.tau2 = dx.tau2;
    model.a_plus_plus = dx.law;
    model.lambda2 = 1.0 / model.a_plus_plus.mean();
    if (!(model.omega2 > 0.0 && model.omega2 < 1.0))
        fail(ErrorKind::NotSubgenerator, "omega2 outside (0,1)");
    if (!(model.tau2 > 0.0 && model.tau2 < 1.0))
        fail(ErrorKind::NotSubgenerator, "tau2 outside (0,1)");

    if (model.arrival_proper) {
        if (model.a_plus.alpha.minCoeff() < -1e-10)
            fail(ErrorKind::NegativeEntry, "excess arrival initial vector has negative entries");
        if (std::abs(model.a_plus.alpha.sum() - 1.0) > 1e-10)
            fail(ErrorKind::NegativeEntry, "excess arrival initial vector does not normalize");
    }
    if (std::abs(model.a_plus_plus.alpha.sum() - 1.0) > 1e-8)
        fail(ErrorKind::NegativeEntry, "two-stage excess initial vector does not normalize");

    return model;
}

}  // namespace qvsolve
