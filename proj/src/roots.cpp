#include "qvsolve/roots.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "qvsolve/errors.hpp"

namespace qvsolve {

namespace {

constexpr double kPi = std::numbers::pi;

struct CharFunction {
    const CountingTransform& ct;
    Eigen::Index m;

    Complex value(Complex z) const {
        ComplexMatrix F = z * ComplexMatrix::Identity(m, m) - ct.value(z);
        return Eigen::PartialPivLU<ComplexMatrix>(F).determinant();
    }

    // Logarithmic derivative d'(z)/d(z) = tr[(zI - S)^{-1} (I - S'(z))].
    Complex log_derivative(Complex z) const {
        ComplexMatrix F = z * ComplexMatrix::Identity(m, m) - ct.value(z);
        ComplexMatrix G = ComplexMatrix::Identity(m, m) - ct.derivative(z);
        Eigen::PartialPivLU<ComplexMatrix> lu(F);
        return lu.solve(G).trace();
    }
};

// Newton on the deflated function d(z) / prod (z - r); the deflation only
// shifts the logarithmic derivative.
bool newton_polish(const CharFunction& f, Complex& z, const std::vector<Complex>& deflate,
                   double target, int max_iter) {
    for (int it = 0; it < max_iter; ++it) {
        Complex ld = f.log_derivative(z);
        for (const Complex& r : deflate) ld -= 1.0 / (z - r);
        if (!std::isfinite(ld.real()) || !std::isfinite(ld.imag())) return false;
        Complex step = 1.0 / ld;
        if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) return false;
        // Keep iterates inside a slightly enlarged disk.
        Complex next = z - step;
        if (std::abs(next) > 1.5) next = z - 0.25 * step;
        z = next;
        if (std::abs(step) < 1e-15 && std::abs(f.value(z)) < target) return true;
    }
    return std::abs(f.value(z)) < target;
}

double principal_delta(double a, double b) {
    double d = b - a;
    while (d > kPi) d -= 2.0 * kPi;
    while (d < -kPi) d += 2.0 * kPi;
    return d;
}

// Total argument change of d along the arc between angles t0 and t1,
// bisecting until consecutive samples differ by less than pi/2.
double arc_argument(const CharFunction& f, double radius, double t0, Complex v0, double t1,
                    Complex v1, int depth) {
    double a0 = std::arg(v0);
    double a1 = std::arg(v1);
    double d = principal_delta(a0, a1);
    if (std::abs(d) < kPi / 2.0 || depth >= 48) return d;
    double tm = 0.5 * (t0 + t1);
    Complex vm = f.value(radius * std::polar(1.0, tm));
    return arc_argument(f, radius, t0, v0, tm, vm, depth + 1) +
           arc_argument(f, radius, tm, vm, t1, v1, depth + 1);
}

int winding_count(const CharFunction& f, double radius, int points) {
    std::vector<Complex> vals(static_cast<size_t>(points));
    for (int i = 0; i < points; ++i)
        vals[static_cast<size_t>(i)] = f.value(radius * std::polar(1.0, 2.0 * kPi * i / points));
    double total = 0.0;
    for (int i = 0; i < points; ++i) {
        int j = (i + 1) % points;
        total += arc_argument(f, radius, 2.0 * kPi * i / points, vals[static_cast<size_t>(i)],
                              2.0 * kPi * j / points, vals[static_cast<size_t>(j)], 0);
    }
    return static_cast<int>(std::lround(total / (2.0 * kPi)));
}

}  // namespace

Complex characteristic_value(const QueueModel& model, Complex z) {
    CountingTransform ct(model.service, model.arrival.alpha, model.arrival.T);
    CharFunction f{ct, model.service_phases()};
    return f.value(z);
}

int winding_number(const QueueModel& model, double radius, int initial_points) {
    CountingTransform ct(model.service, model.arrival.alpha, model.arrival.T);
    CharFunction f{ct, model.service_phases()};
    return winding_count(f, radius, initial_points);
}

RootSet find_inner_roots(const QueueModel& model, const RootOptions& options) {
    const Eigen::Index m = model.service_phases();
    CountingTransform ct(model.service, model.arrival.alpha, model.arrival.T);
    CharFunction f{ct, m};

    // Seed candidates: local minima of |d| on circle grids, a polar grid in
    // the disk, and sign changes on the real segment.
    std::vector<Complex> seeds;
    auto add_circle_minima = [&](double radius, int points) {
        std::vector<double> mag(static_cast<size_t>(points));
        for (int i = 0; i < points; ++i)
            mag[static_cast<size_t>(i)] =
                std::abs(f.value(radius * std::polar(1.0, 2.0 * kPi * i / points)));
        for (int i = 0; i < points; ++i) {
            int prev = (i + points - 1) % points;
            int next = (i + 1) % points;
            if (mag[static_cast<size_t>(i)] <= mag[static_cast<size_t>(prev)] &&
                mag[static_cast<size_t>(i)] <= mag[static_cast<size_t>(next)])
                seeds.push_back(radius * std::polar(1.0, 2.0 * kPi * i / points));
        }
    };
    add_circle_minima(0.999, options.circle_points);
    add_circle_minima(0.9, options.circle_points);
    for (double r = 0.075; r < 0.9; r += 0.1) add_circle_minima(r, 64);

    {  // real-axis sign changes
        const int pts = 400;
        double prev_val = 0.0;
        for (int i = 0; i <= pts; ++i) {
            double x = -0.999 + 1.998 * i / pts;
            double v = f.value(Complex(x, 0.0)).real();
            if (i > 0 && prev_val * v < 0.0)
                seeds.push_back(Complex(x - 0.999 / pts, 0.0));
            prev_val = v;
        }
    }

    std::vector<Complex> found;
    auto known = [&](Complex z) {
        for (const Complex& r : found)
            if (std::abs(z - r) < 10.0 * options.separation) return true;
        return false;
    };

    for (int sweep = 0; sweep < 3 && static_cast<int>(found.size()) < m; ++sweep) {
        for (Complex seed : seeds) {
            if (static_cast<int>(found.size()) >= m) break;
            Complex z = seed;
            if (!newton_polish(f, z, found, options.polish_target, options.max_newton_iterations))
                continue;
            if (std::abs(z) >= 1.0 - 1e-9 || known(z)) continue;
            // Polish on the undeflated function.
            if (!newton_polish(f, z, {}, options.polish_target, options.max_newton_iterations))
                continue;
            if (std::abs(z) >= 1.0 - 1e-9 || known(z)) continue;
            if (std::abs(z.imag()) < 1e-11) z = Complex(z.real(), 0.0);
            found.push_back(z);
            if (std::abs(z.imag()) > 0.0) {
                Complex zc = std::conj(z);
                if (!known(zc)) found.push_back(zc);
            }
        }
        if (static_cast<int>(found.size()) >= m) break;
        // Densify seeds between sweeps.
        seeds.clear();
        int pts = options.circle_points * (2 << sweep);
        for (double r : {0.999, 0.97, 0.9, 0.8, 0.6, 0.45, 0.3, 0.15, 0.05})
            add_circle_minima(r, pts / 4);
    }

    int wind = winding_count(f, options.winding_radius, options.circle_points);
    if (wind != static_cast<int>(m)) {
        std::ostringstream os;
        os << "winding number " << wind << " on |z| = " << options.winding_radius
           << " does not equal m = " << m;
        fail(ErrorKind::RootCountMismatch, os.str());
    }
    if (static_cast<int>(found.size()) != m) {
        if (static_cast<int>(found.size()) < m)
            fail(ErrorKind::MultipleRootsUnsupported,
                 "fewer distinct roots located than the certified count; "
                 "near-multiple roots are unsupported");
        fail(ErrorKind::RootCountMismatch, "located more roots than the certified count");
    }

    // Conjugate symmetrization and pairing.
    RootSet rs;
    rs.roots = found;
    std::sort(rs.roots.begin(), rs.roots.end(), [](const Complex& a, const Complex& b) {
        if (std::abs(std::abs(a) - std::abs(b)) > 1e-14) return std::abs(a) > std::abs(b);
        if (std::abs(a.real() - b.real()) > 1e-14) return a.real() > b.real();
        return a.imag() > b.imag();
    });
    rs.pairing.assign(static_cast<size_t>(m), -1);
    for (int i = 0; i < m; ++i) {
        if (rs.pairing[static_cast<size_t>(i)] >= 0) continue;
        Complex z = rs.roots[static_cast<size_t>(i)];
        if (z.imag() == 0.0) {
            rs.pairing[static_cast<size_t>(i)] = i;
            continue;
        }
        int partner = -1;
        for (int j = i + 1; j < m; ++j) {
            if (rs.pairing[static_cast<size_t>(j)] >= 0) continue;
            if (std::abs(rs.roots[static_cast<size_t>(j)] - std::conj(z)) < 1e-8) {
                partner = j;
                break;
            }
        }
        if (partner < 0)
            fail(ErrorKind::ConjugateAsymmetry, "complex root found without conjugate partner");
        Complex sym = 0.5 * (z + std::conj(rs.roots[static_cast<size_t>(partner)]));
        rs.roots[static_cast<size_t>(i)] = sym;
        rs.roots[static_cast<size_t>(partner)] = std::conj(sym);
        rs.pairing[static_cast<size_t>(i)] = partner;
        rs.pairing[static_cast<size_t>(partner)] = i;
    }

    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j)
            if (std::abs(rs.roots[static_cast<size_t>(i)] - rs.roots[static_cast<size_t>(j)]) <
                options.separation)
                fail(ErrorKind::MultipleRootsUnsupported,
                     "roots closer than the supported separation");

    rs.residual = 0.0;
    for (const Complex& r : rs.roots) rs.residual = std::max(rs.residual, std::abs(f.value(r)));
    if (rs.residual > 1e-10)
        fail(ErrorKind::PolishDivergence, "root residual above 1e-10 after polishing");
    return rs;
}

double approximation_root(const QueueModel& model, ApproximationMode mode, double rho1) {
    double c = 0.0;
    switch (mode) {
        case ApproximationMode::Light: c = model.rho; break;
        case ApproximationMode::Heavy: c = 1.0 - model.rho; break;
        case ApproximationMode::NearRho:
            if (!(rho1 > 0.0 && rho1 < 1.0))
                fail(ErrorKind::BadConfig, "near-rho mode requires rho1 in (0,1)");
            c = model.rho - rho1;
            break;
    }

    MatrixSequence s_seq;
    {
        KernelOptions opt;
        opt.tail_tolerance = 1e-12;
        // only the S family is needed here
        int n_max = opt.initial_n_max;
        for (;; n_max *= 2) {
            s_seq = s_coefficients(model, n_max);
            Vector total = Vector::Zero(model.service_phases());
            for (const auto& mat : s_seq) total += mat.rowwise().sum();
            double deficit = (Vector::Ones(model.service_phases()) - total).cwiseAbs().maxCoeff();
            if (deficit <= opt.tail_tolerance || n_max >= opt.n_cap) break;
        }
    }

    const RowVector& pi = model.service.pi_bar;
    const Vector e = ones(model.service_phases());
    auto fval = [&](double z) {
        double x = z - c;
        double s0 = (pi * series_value(s_seq, x) * e).value();
        double s1 = (pi * series_derivative(s_seq, x) * e).value();
        double s2 = (pi * series_second_derivative(s_seq, x) * e).value();
        return z - s0 - c * s1 - 0.5 * c * c * s2;
    };

    const double lo = std::max(-0.995, c - 0.995);
    const double hi = std::min(0.9995, c + 0.995);
    const int pts = 2000;
    std::vector<double> solutions;
    double prev = fval(lo);
    for (int i = 1; i <= pts; ++i) {
        double x = lo + (hi - lo) * i / pts;
        double v = fval(x);
        if (prev == 0.0) solutions.push_back(lo + (hi - lo) * (i - 1) / pts);
        if (prev * v < 0.0) {
            double a = lo + (hi - lo) * (i - 1) / pts, b = x;
            double fa = prev;
            for (int it = 0; it < 200; ++it) {
                double mid = 0.5 * (a + b);
                double fm = fval(mid);
                if (fm == 0.0 || (b - a) < 1e-14) {
                    a = b = mid;
                    break;
                }
                if (fa * fm < 0.0)
                    b = mid;
                else {
                    a = mid;
                    fa = fm;
                }
            }
            solutions.push_back(0.5 * (a + b));
        }
        prev = v;
    }
    if (solutions.empty())
        fail(ErrorKind::NoRealSolutionInBracket, "no real solution of the approximation equation");

    // Return the solution closest to the exact dominant root.
    RootSet rs = find_inner_roots(model);
    double target = std::abs(rs.roots.front());
    for (const Complex& r : rs.roots)
        if (r.imag() == 0.0) {
            target = r.real();
            break;
        }
    double best = solutions.front();
    for (double s : solutions)
        if (std::abs(s - target) < std::abs(best - target)) best = s;
    return best;
}

TailApproximation tail_approximation(const ComplexMatrix& k, const RootSet& roots, int order,
                                     double epsilon) {
    const int m = roots.count();
    if (order != 1 && order != 3)
        fail(ErrorKind::BadConfig, "tail approximation order must be 1 or 3");
    if (order > m) fail(ErrorKind::OrderExceedsRoots, "order exceeds available roots");

    // Select whole root groups (a real root, or a conjugate pair) in
    // descending modulus until `order` slots are used.
    std::vector<int> selected;
    std::vector<bool> used(static_cast<size_t>(m), false);
    int slots = order;
    for (int i = 0; i < m && slots > 0; ++i) {
        if (used[static_cast<size_t>(i)]) continue;
        int partner = roots.pairing[static_cast<size_t>(i)];
        int width = (partner == i) ? 1 : 2;
        if (width > slots) continue;
        selected.push_back(i);
        used[static_cast<size_t>(i)] = true;
        if (partner != i) {
            selected.push_back(partner);
            used[static_cast<size_t>(partner)] = true;
        }
        slots -= width;
    }
    if (slots != 0)
        fail(ErrorKind::OrderExceedsRoots,
             "cannot honor conjugate pairing with the requested order");

    TailApproximation ta;
    ta.order = order;
    ta.epsilon = epsilon;
    const Eigen::Index phases = k.cols();
    ta.k_coefficients.resize(static_cast<Eigen::Index>(selected.size()), phases);
    for (size_t s = 0; s < selected.size(); ++s) {
        ta.z_list.push_back(roots.roots[static_cast<size_t>(selected[s])]);
        ta.k_coefficients.row(static_cast<Eigen::Index>(s)) = k.row(selected[s]);
    }

    // Exact levels and the approximation share the residue representation;
    // scan for the switchover index.
    auto exact_level = [&](int n) {
        ComplexRowVector row = ComplexRowVector::Zero(phases);
        for (int i = 0; i < m; ++i)
            row += k.row(i) * std::pow(roots.roots[static_cast<size_t>(i)], n);
        return row;
    };
    auto approx_level = [&](int n) {
        ComplexRowVector row = ComplexRowVector::Zero(phases);
        for (size_t s = 0; s < selected.size(); ++s)
            row += ta.k_coefficients.row(static_cast<Eigen::Index>(s)) *
                   std::pow(ta.z_list[s], n);
        return row;
    };

    // With every root selected the expansion is exact from level 0.
    if (static_cast<int>(selected.size()) == m) {
        ta.n_epsilon = 0;
        return ta;
    }

    // Order 1 uses the geometric-ratio locator of the switchover level in
    // addition to the direct relative-error criterion; order 3 uses the
    // direct criterion on its own expansion.
    const Complex z1 = ta.z_list.front();
    const int horizon_cap = 20000;
    int clean_since = -1;
    ComplexRowVector prev = exact_level(0);
    for (int n = 1; n <= horizon_cap; ++n) {
        ComplexRowVector cur = exact_level(n);
        ComplexRowVector app = approx_level(n);
        double worst = 0.0;
        bool informative = false;
        for (Eigen::Index j = 0; j < phases; ++j) {
            double ex = std::abs(cur(j).real());
            if (ex < 1e-250) continue;
            informative = true;
            double err = std::abs(1.0 - app(j).real() / cur(j).real());
            if (order == 1) err = std::max(err, std::abs(cur(j) / (z1 * prev(j)) - 1.0));
            worst = std::max(worst, err);
        }
        if (!informative) {
            if (clean_since < 0) clean_since = n;
            break;  // mass exhausted; criterion holds trivially onward
        }
        if (worst < epsilon) {
            if (clean_since < 0) clean_since = n;
        } else {
            clean_since = -1;
        }
        if (clean_since > 0 && n >= clean_since + 200) break;
        prev = cur;
    }
    if (clean_since < 0)
        fail(ErrorKind::SeriesDivergence, "tail criterion not reached within the scan horizon");
    ta.n_epsilon = clean_since;
    return ta;
}

}  // namespace qvsolve
