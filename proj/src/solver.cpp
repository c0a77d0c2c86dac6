#include "qvsolve/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qvsolve/errors.hpp"

namespace qvsolve {

namespace {

// sum_{j>=0} x^j seq[j]
ComplexMatrix weighted_sum(const MatrixSequence& seq, Complex x) {
    const Eigen::Index m = seq.front().rows();
    ComplexMatrix acc = ComplexMatrix::Zero(m, m);
    Complex w = 1.0;
    for (const auto& mat : seq) {
        acc += w * mat.cast<Complex>();
        w *= x;
    }
    return acc;
}

// sum_{j>=0} x^j seq[j+1]  (starred families, which start at index 1)
ComplexMatrix weighted_sum_shift1(const MatrixSequence& seq, Complex x) {
    const Eigen::Index m = seq.front().rows();
    ComplexMatrix acc = ComplexMatrix::Zero(m, m);
    Complex w = 1.0;
    for (size_t j = 1; j < seq.size(); ++j) {
        acc += w * seq[j].cast<Complex>();
        w *= x;
    }
    return acc;
}

// sum_{j>=0} x^j sum_{t<=j} seq[t]
ComplexMatrix weighted_cumulative_sum(const MatrixSequence& seq, Complex x) {
    const Eigen::Index m = seq.front().rows();
    ComplexMatrix acc = ComplexMatrix::Zero(m, m);
    ComplexMatrix prefix = ComplexMatrix::Zero(m, m);
    Complex w = 1.0;
    for (const auto& mat : seq) {
        prefix += mat.cast<Complex>();
        acc += w * prefix;
        w *= x;
    }
    return acc;
}

RowVector real_part_checked(const ComplexRowVector& v, double tol, const char* what) {
    double worst = v.size() == 0 ? 0.0 : v.imag().cwiseAbs().maxCoeff();
    if (worst > tol) {
        std::ostringstream os;
        os << what << " has imaginary residue " << worst << " above " << tol;
        fail(ErrorKind::ConjugateAsymmetry, os.str());
    }
    return v.real();
}

RowVector clipped_probability_row(RowVector row, const char* what) {
    for (Eigen::Index j = 0; j < row.size(); ++j) {
        if (row(j) < 0.0) {
            if (row(j) < -1e-9) {
                std::ostringstream os;
                os << what << " entry " << row(j) << " below -1e-9";
                fail(ErrorKind::NegativeProbability, os.str());
            }
            row(j) = 0.0;
        }
    }
    return row;
}

// (-L(x))^{-1} rhs for L(x) = L0 + x L1.
ComplexVector neg_lz_solve(const QueueModel& model, Complex x, const ComplexVector& rhs) {
    ComplexMatrix A = -(model.service.L0.cast<Complex>() + x * model.service.L1.cast<Complex>());
    return A.partialPivLu().solve(rhs);
}

Complex cpow(Complex z, int n) {
    Complex acc = 1.0;
    for (int i = 0; i < n; ++i) acc *= z;
    return acc;
}

}  // namespace

BoundarySystem assemble_boundary_system(const QueueModel& model, const KernelSet& kernels,
                                        const RootSet& roots) {
    const Eigen::Index m = model.service_phases();
    const double omega = model.omega;
    const int unknowns = static_cast<int>(m * (m + 1));

    ComplexMatrix gvstar_omega = weighted_sum_shift1(kernels.Vstar, omega);
    ComplexMatrix gcstar_omega = weighted_sum_shift1(kernels.Cstar, omega);
    ComplexMatrix vgf_omega = weighted_sum(kernels.V, omega);
    std::vector<ComplexMatrix> gvstar_root, sgf_root, hv_root, hs_root;
    for (const Complex& g : roots.roots) {
        gvstar_root.push_back(weighted_sum_shift1(kernels.Vstar, g));
        sgf_root.push_back(weighted_sum(kernels.S, g));
        hv_root.push_back(weighted_cumulative_sum(kernels.V, g));
        hs_root.push_back(weighted_cumulative_sum(kernels.S, g));
    }

    const auto kcol = [m](Eigen::Index root, Eigen::Index phase) { return root * m + phase; };
    const auto bcol = [m](Eigen::Index phase) { return m * m + phase; };

    ComplexMatrix full = ComplexMatrix::Zero(unknowns + 1, unknowns);
    ComplexVector full_rhs = ComplexVector::Zero(unknowns + 1);

    // Vacation level-0 balance, rows 0..m-1.
    for (Eigen::Index j = 0; j < m; ++j) {
        Eigen::Index row = j;
        for (Eigen::Index a = 0; a < m; ++a) {
            Complex coeff = (a == j) ? 1.0 : 0.0;
            coeff -= (1.0 - omega) * gvstar_omega(a, j) - gcstar_omega(a, j);
            full(row, bcol(a)) += coeff;
            for (Eigen::Index i = 0; i < m; ++i)
                full(row, kcol(i, a)) -= (1.0 - omega) * gvstar_root[static_cast<size_t>(i)](a, j);
        }
    }

    // Busy/dormant level-0 balance, rows m..2m-1.
    for (Eigen::Index j = 0; j < m; ++j) {
        Eigen::Index row = m + j;
        for (Eigen::Index a = 0; a < m; ++a) {
            full(row, bcol(a)) -= gcstar_omega(a, j);
            for (Eigen::Index i = 0; i < m; ++i) {
                Complex coeff = (a == j) ? 1.0 : 0.0;
                const auto idx = static_cast<size_t>(i);
                coeff -= omega * gvstar_root[idx](a, j) + hv_root[idx](a, j) - hs_root[idx](a, j);
                full(row, kcol(i, a)) += coeff;
            }
        }
    }

    // Level-n balances, n = 1..m-1.
    for (Eigen::Index n = 1; n < m; ++n) {
        for (Eigen::Index j = 0; j < m; ++j) {
            Eigen::Index row = 2 * m + (n - 1) * m + j;
            for (Eigen::Index a = 0; a < m; ++a) {
                full(row, bcol(a)) -= (1.0 - omega) *
                                      std::pow(omega, static_cast<double>(n - 1)) * vgf_omega(a, j);
                for (Eigen::Index i = 0; i < m; ++i) {
                    const Complex g = roots.roots[static_cast<size_t>(i)];
                    Complex coeff = (a == j) ? cpow(g, static_cast<int>(n)) : Complex(0.0);
                    coeff -= cpow(g, static_cast<int>(n - 1)) * sgf_root[static_cast<size_t>(i)](a, j);
                    full(row, kcol(i, a)) += coeff;
                }
            }
        }
    }

    // Normalization, final row.
    {
        Eigen::Index row = unknowns;
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index a = 0; a < m; ++a)
                full(row, kcol(i, a)) = 1.0 / (1.0 - roots.roots[static_cast<size_t>(i)]);
        for (Eigen::Index a = 0; a < m; ++a) full(row, bcol(a)) = 1.0 / (1.0 - omega);
        full_rhs(row) = 1.0;
    }

    // Replace one redundant balance component with the normalization: the
    // first component of the level-(m-1) equation by default (busy/dormant
    // level-0 when m = 1), falling back across components on bad conditioning.
    std::vector<Eigen::Index> candidates;
    if (m >= 2)
        for (Eigen::Index j = 0; j < m; ++j) candidates.push_back(2 * m + (m - 2) * m + j);
    else
        candidates.push_back(1);

    BoundarySystem sys;
    sys.m = m;
    sys.full_lhs = full;
    sys.full_rhs = full_rhs;
    for (Eigen::Index cand : candidates) {
        ComplexMatrix lhs = full.topRows(unknowns);
        lhs.row(cand) = full.row(unknowns);
        ComplexVector rhs = full_rhs.head(unknowns);
        rhs(cand) = full_rhs(unknowns);
        Eigen::JacobiSVD<ComplexMatrix> svd(lhs);
        double cond =
            svd.singularValues()(0) / svd.singularValues()(svd.singularValues().size() - 1);
        if (cond <= 1e12) {
            sys.lhs = lhs;
            sys.rhs = rhs;
            sys.replaced_row = static_cast<int>(cand);
            sys.condition_number = cond;
            return sys;
        }
    }
    fail(ErrorKind::IllConditioned,
         "boundary system condition number exceeds 1e12 for every replacement choice");
}

BoundarySolution solve_boundary(const BoundarySystem& system, const RootSet& roots) {
    const Eigen::Index m = system.m;
    ComplexVector u = system.lhs.partialPivLu().solve(system.rhs);

    BoundarySolution sol;
    sol.condition_number = system.condition_number;
    sol.replaced_row = system.replaced_row;
    sol.root_values = roots.roots;
    sol.k.resize(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index a = 0; a < m; ++a) sol.k(i, a) = u(i * m + a);

    // Residue rows of conjugate roots must be conjugate.
    for (Eigen::Index i = 0; i < m; ++i) {
        int partner = roots.pairing[static_cast<size_t>(i)];
        if (partner == static_cast<int>(i)) {
            double imag = sol.k.row(i).imag().cwiseAbs().maxCoeff();
            if (imag > 1e-8)
                fail(ErrorKind::ConjugateAsymmetry, "real root carries complex residue row");
            sol.k.row(i) = sol.k.row(i).real().cast<Complex>();
        } else if (partner > static_cast<int>(i)) {
            ComplexRowVector diff = sol.k.row(i) - sol.k.row(partner).conjugate();
            if (diff.cwiseAbs().maxCoeff() > 1e-8)
                fail(ErrorKind::ConjugateAsymmetry,
                     "conjugate root pair residues deviate beyond 1e-8");
            ComplexRowVector avg = 0.5 * (sol.k.row(i) + sol.k.row(partner).conjugate());
            sol.k.row(i) = avg;
            sol.k.row(partner) = avg.conjugate();
        }
    }

    ComplexRowVector bu = u.tail(m).transpose();
    sol.b = real_part_checked(bu, 1e-8, "level-0 vacation vector").transpose();

    // Residuals of every original equation, including the replaced one.
    ComplexVector u_sym(m * (m + 1));
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index a = 0; a < m; ++a) u_sym(i * m + a) = sol.k(i, a);
    for (Eigen::Index a = 0; a < m; ++a) u_sym(m * m + a) = sol.b(a);
    ComplexVector resid = system.full_lhs * u_sym - system.full_rhs;
    sol.residual = resid.cwiseAbs().maxCoeff();
    if (sol.residual > 1e-8) {
        std::ostringstream os;
        os << "boundary equation residual " << sol.residual << " above 1e-8";
        fail(ErrorKind::IllConditioned, os.str());
    }
    return sol;
}

EpochDistributions pre_arrival_distribution(const BoundarySolution& solution,
                                            const QueueModel& model, int n_report) {
    const Eigen::Index m = model.service_phases();
    EpochDistributions dist;
    dist.n_report = n_report;
    dist.omega = model.omega;
    dist.tau = model.tau;
    dist.root_values = solution.root_values;

    const RowVector b = solution.b.transpose();
    dist.pre_vac.resize(static_cast<size_t>(n_report) + 1);
    dist.pre_busy.resize(static_cast<size_t>(n_report) + 1);
    for (int n = 0; n <= n_report; ++n) {
        dist.pre_vac[static_cast<size_t>(n)] =
            clipped_probability_row(b * std::pow(model.omega, n), "pre-arrival vacation row");
        ComplexRowVector row = ComplexRowVector::Zero(m);
        for (Eigen::Index i = 0; i < m; ++i)
            row += solution.k.row(i) * cpow(solution.root_values[static_cast<size_t>(i)], n);
        dist.pre_busy[static_cast<size_t>(n)] = clipped_probability_row(
            real_part_checked(row, 1e-10, "pre-arrival busy row"), "pre-arrival busy row");
    }
    return dist;
}

void arbitrary_distribution(EpochDistributions& dist, const BoundarySolution& solution,
                            const QueueModel& model, const KernelSet& kernels) {
    const Eigen::Index m = model.service_phases();
    const double omega = model.omega;
    const double tau = model.tau;
    const RowVector b = solution.b.transpose();
    const Vector e = ones(m);

    ComplexMatrix gdstar_omega = weighted_sum_shift1(kernels.Deltastar, omega);
    ComplexMatrix gpstar_omega = weighted_sum_shift1(kernels.Phistar, omega);
    ComplexMatrix delta_omega = weighted_sum(kernels.Delta, omega);

    ComplexRowVector arb_vac0 =
        b.cast<Complex>() * ((1.0 - tau) * gdstar_omega - gpstar_omega);
    ComplexRowVector arb_busy0 = b.cast<Complex>() * gpstar_omega;
    ComplexMatrix busy_geo_roots(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const Complex g = dist.root_values[static_cast<size_t>(i)];
        ComplexMatrix gdstar_g = weighted_sum_shift1(kernels.Deltastar, g);
        ComplexMatrix hdelta_g = weighted_cumulative_sum(kernels.Delta, g);
        ComplexMatrix homega_g = weighted_cumulative_sum(kernels.Omega, g);
        ComplexMatrix omega_gf_g = weighted_sum(kernels.Omega, g);
        arb_vac0 += solution.k.row(i) * ((1.0 - tau) * gdstar_g);
        arb_busy0 += solution.k.row(i) * (tau * gdstar_g + hdelta_g - homega_g);
        busy_geo_roots.row(i) = solution.k.row(i) * omega_gf_g;
    }

    RowVector vac0 = real_part_checked(arb_vac0, 1e-8, "arbitrary vacation level 0");
    RowVector busy0 = real_part_checked(arb_busy0, 1e-8, "arbitrary busy level 0");
    RowVector vac_geo = tau * b;  // pi0(n) = vac_geo * omega^{n-1}
    RowVector busy_geo_omega = real_part_checked(
        (1.0 - tau) * b.cast<Complex>() * delta_omega, 1e-12, "arbitrary busy omega generator");

    // Total arbitrary-epoch mass in closed form.
    double mass = vac0.sum() + busy0.sum() + vac_geo.sum() / (1.0 - omega) +
                  busy_geo_omega.sum() / (1.0 - omega);
    for (Eigen::Index i = 0; i < m; ++i)
        mass += ((busy_geo_roots.row(i) * e.cast<Complex>()).value() /
                 (1.0 - dist.root_values[static_cast<size_t>(i)]))
                    .real();
    dist.mass_defect = std::abs(mass - 1.0);
    if (dist.mass_defect >= 1e-6) {
        std::ostringstream os;
        os << "arbitrary-epoch mass defect " << dist.mass_defect << " at or above 1e-6";
        fail(ErrorKind::MassDefect, os.str());
    }
    const double scale = 1.0 / mass;
    vac0 *= scale;
    busy0 *= scale;
    vac_geo *= scale;
    busy_geo_omega *= scale;
    busy_geo_roots *= scale;

    dist.vac_geo = vac_geo;
    dist.busy_geo_omega = busy_geo_omega;
    dist.busy_geo_roots = busy_geo_roots;

    // rho', conditional busy vector, busy departure rate.
    ComplexRowVector busy_total = busy_geo_omega.cast<Complex>() / (1.0 - omega);
    for (Eigen::Index i = 0; i < m; ++i)
        busy_total += busy_geo_roots.row(i) / (1.0 - dist.root_values[static_cast<size_t>(i)]);
    RowVector busy_sum = real_part_checked(busy_total, 1e-8, "busy occupancy vector");
    dist.rho_prime = busy_sum.sum();
    dist.cond_busy_phase = busy_sum / dist.rho_prime;
    dist.pibar_gap = (dist.cond_busy_phase - model.service.pi_bar).cwiseAbs().maxCoeff();
    dist.departure_rate = (busy_sum * model.service.L1 * e).value();

    dist.arb_vac.resize(static_cast<size_t>(dist.n_report) + 1);
    dist.arb_busy.resize(static_cast<size_t>(dist.n_report) + 1);
    dist.arb_vac[0] = clipped_probability_row(vac0, "arbitrary vacation row");
    dist.arb_busy[0] = clipped_probability_row(busy0, "arbitrary busy row");
    for (int n = 1; n <= dist.n_report; ++n) {
        dist.arb_vac[static_cast<size_t>(n)] =
            clipped_probability_row(vac_geo * std::pow(omega, n - 1), "arbitrary vacation row");
        ComplexRowVector row = busy_geo_omega.cast<Complex>() * std::pow(omega, n - 1);
        for (Eigen::Index i = 0; i < m; ++i)
            row += busy_geo_roots.row(i) * cpow(dist.root_values[static_cast<size_t>(i)], n - 1);
        dist.arb_busy[static_cast<size_t>(n)] = clipped_probability_row(
            real_part_checked(row, 1e-8, "arbitrary busy row"), "arbitrary busy row");
    }
}

void departure_epochs(EpochDistributions& dist, const QueueModel& model) {
    const Eigen::Index m = model.service_phases();
    if (!(dist.rho_prime > 0.0))
        fail(ErrorKind::NormalizationFailure, "departure epochs require rho' > 0");

    // pi+(n) is the post-departure flux pi1(n+1) L1 normalized by the busy
    // departure rate sum_{n>=1} pi1(n) L1 e (equal to mu* rho' when the busy
    // occupancy aligns with pi_bar); the index shift keeps the total mass at
    // exactly one.
    const double rate = dist.departure_rate;
    dist.post_dep.resize(static_cast<size_t>(dist.n_report) + 1);
    for (int n = 0; n <= dist.n_report; ++n) {
        ComplexRowVector flux = dist.busy_geo_omega.cast<Complex>() * std::pow(dist.omega, n);
        for (Eigen::Index i = 0; i < m; ++i)
            flux += dist.busy_geo_roots.row(i) * cpow(dist.root_values[static_cast<size_t>(i)], n);
        ComplexRowVector row = flux * model.service.L1.cast<Complex>() / rate;
        dist.post_dep[static_cast<size_t>(n)] = clipped_probability_row(
            real_part_checked(row, 1e-8, "post-departure row"), "post-departure row");
    }

    dist.pre_service.assign(static_cast<size_t>(dist.n_report) + 1, RowVector::Zero(m));
    if (dist.n_report >= 1) {
        dist.pre_service[1] = dist.post_dep[1] + dist.post_dep[0];
        for (int n = 2; n <= dist.n_report; ++n)
            dist.pre_service[static_cast<size_t>(n)] = dist.post_dep[static_cast<size_t>(n)];
    }
}

Measures performance_measures(const EpochDistributions& dist, const BoundarySolution& solution,
                              const QueueModel& model) {
    const Eigen::Index m = model.service_phases();
    const double omega = dist.omega;
    const Vector e = ones(m);
    const RowVector b = solution.b.transpose();

    Measures ms;
    ms.rho_prime = dist.rho_prime;
    ms.cond_busy_phase = dist.cond_busy_phase;

    // L_s: every level sequence is geometric, so sum n x^{n-1} = (1-x)^{-2}.
    const double om2 = (1.0 - omega) * (1.0 - omega);
    double ls = dist.vac_geo.sum() / om2 + dist.busy_geo_omega.sum() / om2;
    for (Eigen::Index i = 0; i < m; ++i) {
        Complex g = dist.root_values[static_cast<size_t>(i)];
        ls += ((dist.busy_geo_roots.row(i) * e.cast<Complex>()).value() / ((1.0 - g) * (1.0 - g)))
                  .real();
    }
    ms.L_s = ls;
    ms.L_q = ms.L_s - (1.0 - dist.arb_vac[0].sum() - dist.arb_busy[0].sum());

    // W_s from the pre-arrival blocks: the nested service sums collapse to
    // (1/(1-x)) (-L(x))^{-1} e at x = gamma_i and x = omega.
    auto g_of = [&](Complex x) -> ComplexVector {
        ComplexVector col = neg_lz_solve(model, x, e.cast<Complex>());
        return col / (1.0 - x);
    };
    Complex ws = 0.0;
    for (Eigen::Index i = 0; i < m; ++i)
        ws += (solution.k.row(i) * g_of(dist.root_values[static_cast<size_t>(i)])).value();
    ws += (b.cast<Complex>() * g_of(Complex(omega, 0.0))).value();
    ws += b.sum() / ((1.0 - omega) * model.vacation.gamma);
    if (std::abs(ws.imag()) > 1e-9)
        fail(ErrorKind::ConjugateAsymmetry, "mean sojourn time has imaginary residue");
    ms.W_s = ws.real();
    ms.W_s_little = ms.L_s / model.lambda;

    ms.E_B = (1.0 / model.service.mu_star) / dist.post_dep[0].sum();
    ms.E_I = (1.0 - ms.rho_prime) / ms.rho_prime * ms.E_B;
    return ms;
}

Complex waiting_time_lst(const BoundarySolution& solution, const QueueModel& model, Complex s) {
    const Eigen::Index m = model.service_phases();
    ComplexMatrix A = s * ComplexMatrix::Identity(m, m) - model.service.L0.cast<Complex>();
    ComplexMatrix phi1 = A.partialPivLu().solve(model.service.L1.cast<Complex>());

    double max_weight = model.omega;
    for (const Complex& g : solution.root_values) max_weight = std::max(max_weight, std::abs(g));
    Eigen::ComplexEigenSolver<ComplexMatrix> es(phi1, false);
    double sr = es.eigenvalues().cwiseAbs().maxCoeff();
    if (sr >= 1.0 / max_weight)
        fail(ErrorKind::SeriesDivergence,
             "phi1 spectral radius reaches the reciprocal of the largest geometric weight");

    const ComplexVector phie = phi1 * ComplexVector::Ones(m);
    const ComplexMatrix id = ComplexMatrix::Identity(m, m);
    Complex acc = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        Complex g = solution.root_values[static_cast<size_t>(i)];
        ComplexVector col = (id - g * phi1).partialPivLu().solve(phie);
        acc += (solution.k.row(i) * col).value();
    }
    ComplexVector colw = (id - model.omega * phi1).partialPivLu().solve(phie);
    const double gamma = model.vacation.gamma;
    acc += (gamma / (gamma + s)) * (solution.b.transpose().cast<Complex>() * colw).value();
    return acc;
}

SolveResult solve_model(const ModelDescription& raw, const SolveOptions& options) {
    QueueModel model = validate_model(raw, options.model);
    return solve_model(model, options);
}

SolveResult solve_model(const QueueModel& model, SolveOptions options) {
    SolveResult out;
    out.model = model;
    out.roots = find_inner_roots(model, options.roots);

    double max_mod = model.omega;
    for (const Complex& g : out.roots.roots) max_mod = std::max(max_mod, std::abs(g));
    if (!options.kernels.geometric_hint) options.kernels.geometric_hint = max_mod;
    out.kernels = compute_kernels(model, options.kernels);

    BoundarySystem system = assemble_boundary_system(model, out.kernels, out.roots);
    out.boundary = solve_boundary(system, out.roots);

    out.dist = pre_arrival_distribution(out.boundary, model, options.n_report);
    arbitrary_distribution(out.dist, out.boundary, model, out.kernels);
    departure_epochs(out.dist, model);
    out.measures = performance_measures(out.dist, out.boundary, model);

    out.diag.boundary_residual = out.boundary.residual;
    out.diag.boundary_condition = out.boundary.condition_number;
    out.diag.kernel_tail_mass = out.kernels.tail_mass;
    out.diag.kernel_clipped = out.kernels.clipped_entries;
    out.diag.kernel_worst_negative = out.kernels.worst_negative;
    out.diag.kernel_n_max = out.kernels.n_max;
    out.diag.winding = static_cast<int>(out.roots.roots.size());
    out.diag.root_residual = out.roots.residual;
    {
        double mass = out.boundary.b.sum() / (1.0 - model.omega);
        for (Eigen::Index i = 0; i < out.boundary.k.rows(); ++i)
            mass += (out.boundary.k.row(i).sum() /
                     (1.0 - out.roots.roots[static_cast<size_t>(i)]))
                        .real();
        out.diag.pre_arrival_mass_error = std::abs(mass - 1.0);
    }
    out.diag.arbitrary_mass_defect = out.dist.mass_defect;
    out.diag.little_gap = std::abs(out.measures.W_s - out.measures.W_s_little) / out.measures.W_s;
    out.diag.pibar_gap = out.dist.pibar_gap;
    out.diag.departure_rate_gap =
        std::abs(out.dist.departure_rate - model.service.mu_star * out.dist.rho_prime) /
        (model.service.mu_star * out.dist.rho_prime);
    return out;
}

}  // namespace qvsolve
