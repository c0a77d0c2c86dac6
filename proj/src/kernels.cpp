#include "qvsolve/kernels.hpp"

#include <cmath>
#include <sstream>

#include "qvsolve/errors.hpp"

namespace qvsolve {

namespace {

Matrix kron_identity_right(const Matrix& A, Eigen::Index k) {
    // A (x) I_k
    Matrix out = Matrix::Zero(A.rows() * k, A.cols() * k);
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            for (Eigen::Index l = 0; l < k; ++l) out(i * k + l, j * k + l) = A(i, j);
    return out;
}

Matrix kron_identity_left(Eigen::Index k, const Matrix& A) {
    // I_k (x) A
    Matrix out = Matrix::Zero(k * A.rows(), k * A.cols());
    for (Eigen::Index b = 0; b < k; ++b)
        out.block(b * A.rows(), b * A.cols(), A.rows(), A.cols()) = A;
    return out;
}

// X * (-L0)^{-1} through a prefactored transpose solve.
class RightInverter {
public:
    explicit RightInverter(const Matrix& neg_l0) : lu_(neg_l0.transpose()) {}
    Matrix apply(const Matrix& x) const { return lu_.solve(x.transpose()).transpose(); }

private:
    Eigen::PartialPivLU<Matrix> lu_;
};

}  // namespace

CountingTransform::CountingTransform(const MarkovianService& service, const RowVector& alpha,
                                     const Matrix& T)
    : m_(service.phases()), eta_(T.rows()), alpha_(alpha) {
    // M = -(L0 (+) T), B = L1 (x) I_eta, rhs = I_m (x) T0.
    big_m_ = -(kron_identity_right(service.L0, eta_) + kron_identity_left(m_, T));
    big_b_ = kron_identity_right(service.L1, eta_);
    Vector t0 = -T.rowwise().sum();
    rhs_ = Matrix::Zero(m_ * eta_, m_);
    for (Eigen::Index i = 0; i < m_; ++i) rhs_.block(i * eta_, i, eta_, 1) = t0;
}

ComplexMatrix CountingTransform::project(const ComplexMatrix& block) const {
    ComplexMatrix out(m_, block.cols());
    for (Eigen::Index i = 0; i < m_; ++i)
        out.row(i) = alpha_.cast<Complex>() * block.block(i * eta_, 0, eta_, block.cols());
    return out;
}

ComplexMatrix CountingTransform::resolve(Complex z, const ComplexMatrix& rhs) const {
    ComplexMatrix A = big_m_.cast<Complex>() - z * big_b_.cast<Complex>();
    Eigen::PartialPivLU<ComplexMatrix> lu(A);
    ComplexMatrix x = lu.solve(rhs);
    if (!x.allFinite())
        fail(ErrorKind::SingularResolvent, "counting transform resolvent is singular");
    return x;
}

ComplexMatrix CountingTransform::apply_b(const ComplexMatrix& x) const {
    return big_b_.cast<Complex>() * x;
}

ComplexMatrix CountingTransform::value(Complex z) const {
    return project(resolve(z, rhs_.cast<Complex>()));
}

ComplexMatrix CountingTransform::derivative(Complex z) const {
    ComplexMatrix w = resolve(z, rhs_.cast<Complex>());
    return project(resolve(z, apply_b(w)));
}

ComplexMatrix CountingTransform::second_derivative(Complex z) const {
    ComplexMatrix w = resolve(z, rhs_.cast<Complex>());
    ComplexMatrix w1 = resolve(z, apply_b(w));
    return 2.0 * project(resolve(z, apply_b(w1)));
}

ComplexMatrix s_matrix_of_z(const QueueModel& model, Complex z) {
    CountingTransform ct(model.service, model.arrival.alpha, model.arrival.T);
    return ct.value(z);
}

MatrixSequence counting_coefficients(const MarkovianService& service, const RowVector& alpha,
                                     const Matrix& T, int n_max) {
    const Eigen::Index m = service.phases();
    const Eigen::Index eta = T.rows();
    Matrix big_m = -(kron_identity_right(service.L0, eta) + kron_identity_left(m, T));
    Matrix big_b = kron_identity_right(service.L1, eta);
    Vector t0 = -T.rowwise().sum();
    Matrix w = Matrix::Zero(m * eta, m);
    for (Eigen::Index i = 0; i < m; ++i) w.block(i * eta, i, eta, 1) = t0;

    Eigen::PartialPivLU<Matrix> lu(big_m);
    w = lu.solve(w);

    MatrixSequence out(static_cast<size_t>(n_max) + 1);
    for (int n = 0;; ++n) {
        Matrix coeff(m, m);
        for (Eigen::Index i = 0; i < m; ++i)
            coeff.row(i) = alpha * w.block(i * eta, 0, eta, m);
        out[static_cast<size_t>(n)] = std::move(coeff);
        if (n == n_max) break;
        w = lu.solve(big_b * w);
    }
    return out;
}

MatrixSequence s_coefficients(const QueueModel& model, int n_max) {
    return counting_coefficients(model.service, model.arrival.alpha, model.arrival.T, n_max);
}

MatrixSequence omega_coefficients(const QueueModel& model, const MatrixSequence& s_seq) {
    const Eigen::Index m = model.service_phases();
    const double lambda = model.lambda;
    RightInverter inv(-model.service.L0);
    MatrixSequence omega(s_seq.size());
    omega[0] = lambda * inv.apply(Matrix::Identity(m, m) - s_seq[0]);
    for (size_t n = 1; n < s_seq.size(); ++n)
        omega[n] = inv.apply(omega[n - 1] * model.service.L1 - lambda * s_seq[n]);
    return omega;
}

namespace {

struct ClipStats {
    long clipped = 0;
    double worst = 0.0;
};

void clip_family(MatrixSequence& seq, bool strict, const char* family, ClipStats& stats) {
    for (auto& mat : seq) {
        for (Eigen::Index i = 0; i < mat.rows(); ++i)
            for (Eigen::Index j = 0; j < mat.cols(); ++j) {
                double v = mat(i, j);
                if (v < 0.0) {
                    stats.worst = std::min(stats.worst, v);
                    if (v > -1e-14) {
                        mat(i, j) = 0.0;
                        ++stats.clipped;
                    } else if (strict && v < -1e-10) {
                        std::ostringstream os;
                        os << family << " kernel entry " << v
                           << " below -1e-10; upstream truncation damage";
                        fail(ErrorKind::NegativeEntry, os.str());
                    }
                }
            }
    }
}

double family_deficit(const MatrixSequence& seq) {
    const Eigen::Index m = seq.front().rows();
    Vector total = Vector::Zero(m);
    for (const auto& mat : seq) total += mat.rowwise().sum();
    return (Vector::Ones(m) - total).cwiseAbs().maxCoeff();
}

}  // namespace

KernelSet compute_kernels(const QueueModel& model, const KernelOptions& options) {
    const Eigen::Index m = model.service_phases();
    const double tol = options.tail_tolerance;

    int n_max = options.initial_n_max;
    for (;; n_max *= 2) {
        if (n_max > options.n_cap) n_max = options.n_cap;

        KernelSet ks;
        ks.n_max = n_max;
        ks.S = s_coefficients(model, n_max);
        ks.V = counting_coefficients(model.service, model.a_plus.alpha, model.a_plus.T, n_max);
        ks.C = counting_coefficients(model.service, model.a_plus_plus.alpha, model.a_plus_plus.T,
                                     n_max);

        double deficit =
            std::max({family_deficit(ks.S), family_deficit(ks.V), family_deficit(ks.C)});
        double geo = 0.0;
        if (options.geometric_hint) {
            double x = *options.geometric_hint;
            geo = std::pow(x, n_max) / ((1.0 - x) * (1.0 - x));
        }
        if ((deficit > tol || geo > tol) && n_max < options.n_cap) continue;
        if (deficit > tol || geo > tol) {
            std::ostringstream os;
            os << "kernel truncation cap " << options.n_cap << " reached with tail mass "
               << std::max(deficit, geo) << " > " << tol;
            fail(ErrorKind::TruncationTooSmall, os.str());
        }
        ks.tail_mass = std::max(deficit, geo);

        ks.Omega = omega_coefficients(model, ks.S);

        RightInverter inv(-model.service.L0);
        const Matrix& L1 = model.service.L1;
        const Matrix id = Matrix::Identity(m, m);
        const size_t len = static_cast<size_t>(n_max) + 1;

        // Delta / Delta* / V* from V.
        ks.Delta.resize(len);
        ks.Delta[0] = model.lambda1 * inv.apply(id - ks.V[0]);
        for (size_t n = 1; n < len; ++n)
            ks.Delta[n] = inv.apply(ks.Delta[n - 1] * L1 - model.lambda1 * ks.V[n]);
        ks.Vstar.assign(len, Matrix::Zero(m, m));
        for (size_t n = 1; n < len; ++n) ks.Vstar[n] = (1.0 / model.lambda1) * ks.Delta[n - 1] * L1;
        ks.Deltastar.assign(len, Matrix::Zero(m, m));
        ks.Deltastar[1] = inv.apply(id - ks.Delta[0]) * L1;
        for (size_t n = 2; n < len; ++n)
            ks.Deltastar[n] = inv.apply(ks.Deltastar[n - 1] - ks.Delta[n - 1]) * L1;

        // Phi / Phi* / C* from C.
        ks.Phi.resize(len);
        ks.Phi[0] = model.lambda2 * inv.apply(id - ks.C[0]);
        for (size_t n = 1; n < len; ++n)
            ks.Phi[n] = inv.apply(ks.Phi[n - 1] * L1 - model.lambda2 * ks.C[n]);
        ks.Cstar.assign(len, Matrix::Zero(m, m));
        for (size_t n = 1; n < len; ++n) ks.Cstar[n] = (1.0 / model.lambda2) * ks.Phi[n - 1] * L1;
        ks.Phistar.assign(len, Matrix::Zero(m, m));
        ks.Phistar[1] = inv.apply(id - ks.Phi[0]) * L1;
        for (size_t n = 2; n < len; ++n)
            ks.Phistar[n] = inv.apply(ks.Phistar[n - 1] - ks.Phi[n - 1]) * L1;

        // Entries below -1e-14 signal algorithmic damage for proper models;
        // matrix-exponential arrival laws legitimately produce signed
        // kernels, so only roundoff clipping applies there.
        ClipStats stats;
        const bool strict = model.arrival_proper;
        clip_family(ks.S, strict, "S", stats);
        clip_family(ks.Omega, strict, "Omega", stats);
        clip_family(ks.V, strict, "V", stats);
        clip_family(ks.Vstar, strict, "V*", stats);
        clip_family(ks.Delta, strict, "Delta", stats);
        clip_family(ks.Deltastar, strict, "Delta*", stats);
        clip_family(ks.C, strict, "C", stats);
        clip_family(ks.Cstar, strict, "C*", stats);
        clip_family(ks.Phi, strict, "Phi", stats);
        clip_family(ks.Phistar, strict, "Phi*", stats);
        ks.clipped_entries = stats.clipped;
        ks.worst_negative = stats.worst;
        return ks;
    }
}

Matrix series_value(const MatrixSequence& seq, double x) {
    Matrix acc = Matrix::Zero(seq.front().rows(), seq.front().cols());
    double w = 1.0;
    for (const auto& mat : seq) {
        acc += w * mat;
        w *= x;
    }
    return acc;
}

Matrix series_derivative(const MatrixSequence& seq, double x) {
    Matrix acc = Matrix::Zero(seq.front().rows(), seq.front().cols());
    double w = 1.0;
    for (size_t n = 1; n < seq.size(); ++n) {
        acc += static_cast<double>(n) * w * seq[n];
        w *= x;
    }
    return acc;
}

Matrix series_second_derivative(const MatrixSequence& seq, double x) {
    Matrix acc = Matrix::Zero(seq.front().rows(), seq.front().cols());
    double w = 1.0;
    for (size_t n = 2; n < seq.size(); ++n) {
        if (n > 2) w *= x;
        acc += static_cast<double>(n) * static_cast<double>(n - 1) * w * seq[n];
    }
    return acc;
}

}  // namespace qvsolve
