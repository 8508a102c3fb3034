#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rgf/linalg.hpp"
#include "rgf/reparam.hpp"

namespace rgf {

struct solve_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
/// The linear system a z = upsilon has no solution at all.
struct infeasible_error : solve_error {
    using solve_error::solve_error;
};
/// The system is linearly consistent but admits no solution inside the
/// (bounded) reparametrized domain.
struct box_infeasible_error : infeasible_error {
    using infeasible_error::infeasible_error;
};
struct stagnation_error : solve_error {
    double primal_residual;
    stagnation_error(const std::string& msg, double res)
        : solve_error(msg + " (primal residual " + std::to_string(res) + ")"),
          primal_residual(res) {}
};

struct SolveOptions {
    double tol = 1e-10;
    int max_iter = 100;
    double damping = 0.5;  // backtracking shrink factor on the residual norm
    double jacobian_regularization = 1e-12;
};

struct OracleSolution {
    Vec z_star;
    Vec dual;  // length M
    double kkt_residual_primal = 0.0;        // ||a z* - upsilon||_inf
    double kkt_residual_stationarity = 0.0;  // ||(I - P_row)(phi(z*) - shift)||_inf
    int iterations = 0;
    std::vector<double> residual_history;  // ||R||_2 at each accepted iterate
};

namespace detail {

/// Separable strictly increasing dual map phi with inverse and the weight
/// 1/phi'(z) used in the dual Jacobian. range_halfwidth bounds |phi| when
/// the map saturates (arctan-type); infinite otherwise.
struct DualMap {
    std::function<double(double)> phi;
    std::function<double(double)> phi_inverse;
    std::function<double(double)> inv_weight;  // 1/phi'(z), finite on the domain
    double range_halfwidth = std::numeric_limits<double>::infinity();
    bool bounded_primal = false;  // z constrained to (-1, 1)
};

inline DualMap family_dual_map(const ReparamFamily& f) {
    DualMap m;
    m.phi = [f](double z) { return f.h(z); };
    m.phi_inverse = [f](double v) { return f.h_inverse(v); };
    m.range_halfwidth = f.h_range_halfwidth();
    m.bounded_primal = f.bounded_domain();
    switch (f.kind) {
        case ReparamKind::Identity:
            m.inv_weight = [](double) { return 1.0; };
            break;
        case ReparamKind::Power:
            m.inv_weight = [p = f.p](double z) {
                return (4.0 / (p * p)) * std::pow(std::abs(z), 2.0 - p);
            };
            break;
        case ReparamKind::Sinh:
            m.inv_weight = [](double z) { return 1.0 + z * z; };
            break;
        case ReparamKind::Tanh:
            m.inv_weight = [](double z) {
                const double d = 1.0 - z * z;
                return d * d;
            };
            break;
    }
    return m;
}

inline DualMap lp_dual_map(double p) {
    DualMap m;
    m.phi = [p](double z) { return sgn(z) * std::pow(std::abs(z), p - 1.0); };
    m.phi_inverse = [p](double u) { return sgn(u) * std::pow(std::abs(u), 1.0 / (p - 1.0)); };
    m.inv_weight = [p](double z) { return std::pow(std::abs(z), 2.0 - p) / (p - 1.0); };
    return m;
}

inline void check_feasible(const Mat& a, const Vec& upsilon) {
    const Vec ls = pinv_solve(a, upsilon);
    const double res = norm_inf(matvec(a, ls) - upsilon);
    if (res > 1e-8 * (1.0 + norm_inf(upsilon)))
        throw infeasible_error("constraint system a z = upsilon is infeasible (least-squares residual " +
                               std::to_string(res) + ")");
}

/// Damped Newton on the dual residual R(nu) = a phi^{-1}(shift + a^T nu) - upsilon
/// with Jacobian a diag(1/phi'(z)) a^T, regularized when near singular.
inline OracleSolution dual_newton(const Mat& a, const Vec& upsilon, const Vec& shift,
                                  const DualMap& map, const SolveOptions& opts,
                                  const Vec& nu0) {
    const std::size_t mm = a.rows, nn = a.cols;
    if (upsilon.size() != mm || shift.size() != nn)
        throw std::invalid_argument("dual_newton: dimension mismatch");
    check_feasible(a, upsilon);

    auto primal_of = [&](const Vec& nu, Vec& z) -> bool {
        const Vec u = shift + matvec_t(a, nu);
        for (double ui : u)
            if (std::abs(ui) >= map.range_halfwidth) return false;  // outside dual range
        z.resize(nn);
        for (std::size_t i = 0; i < nn; ++i) z[i] = map.phi_inverse(u[i]);
        return true;
    };

    Vec nu = nu0, z;
    if (!primal_of(nu, z))
        throw std::invalid_argument("dual_newton: initialization outside the dual range");
    Vec r = matvec(a, z) - upsilon;
    OracleSolution sol;
    sol.residual_history.push_back(norm2(r));

    for (int it = 0; it < opts.max_iter; ++it) {
        if (norm_inf(r) <= opts.tol) {
            sol.iterations = it;
            sol.z_star = z;
            sol.dual = nu;
            sol.kkt_residual_primal = norm_inf(r);
            Vec station(nn);
            for (std::size_t i = 0; i < nn; ++i) station[i] = map.phi(z[i]) - shift[i];
            sol.kkt_residual_stationarity = norm_inf(rowspace_complement(a, station));
            return sol;
        }

        Mat jac(mm, mm);
        for (std::size_t i = 0; i < mm; ++i)
            for (std::size_t j = i; j < mm; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < nn; ++k)
                    s += a(i, k) * map.inv_weight(z[k]) * a(j, k);
                jac(i, j) = s;
                jac(j, i) = s;
            }
        // smallest eigenvalue of the SPSD dual system; regularize when the
        // system is numerically singular (rank-deficient a)
        {
            const Svd js = svd(jac);
            if (js.sigma.back() < opts.jacobian_regularization)
                for (std::size_t i = 0; i < mm; ++i)
                    jac(i, i) += opts.jacobian_regularization;
        }
        Vec step = solve_square(jac, -1.0 * r);

        const double rn = norm2(r);
        double beta = 1.0;
        bool moved = false;
        Vec z_trial;
        while (beta >= 1e-14) {
            const Vec nu_trial = nu + beta * step;
            if (primal_of(nu_trial, z_trial)) {
                const Vec r_trial = matvec(a, z_trial) - upsilon;
                if (norm2(r_trial) <= (1.0 - 1e-4 * beta) * rn) {
                    nu = nu_trial;
                    z = z_trial;
                    r = r_trial;
                    moved = true;
                    break;
                }
            }
            beta *= opts.damping;
        }
        if (!moved) {
            if (map.bounded_primal)
                throw box_infeasible_error(
                    "no solution of a z = upsilon inside (-1,1)^N: dual iteration cannot "
                    "reduce the residual (" + std::to_string(rn) + ")");
            throw stagnation_error("dual Newton stagnated", norm_inf(r));
        }
        sol.residual_history.push_back(norm2(r));
    }
    if (map.bounded_primal && norm_inf(r) > opts.tol)
        throw box_infeasible_error(
            "no solution of a z = upsilon inside (-1,1)^N detected within the iteration "
            "budget (residual " + std::to_string(norm_inf(r)) + ")");
    throw stagnation_error("dual Newton did not converge", norm_inf(r));
}

}  // namespace detail

/// Constrained minimizer of the separable Bregman divergence D_F(., w0_tilde)
/// over {z : a z = upsilon}, computed through the dual root-finding problem
/// a h^{-1}(h(w0_tilde) + a^T nu) = upsilon. The returned point certifies the
/// interior KKT conditions through its two residuals.
inline OracleSolution bregman_projection(const ReparamFamily& f, const Mat& a,
                                         const Vec& upsilon, const Vec& w0_tilde,
                                         const SolveOptions& opts = {}) {
    if (w0_tilde.size() != a.cols)
        throw std::invalid_argument("bregman_projection: w0_tilde length mismatch");
    for (double w : w0_tilde)
        if (!f.in_domain(w))
            throw std::domain_error("bregman_projection: w0_tilde not strictly inside the domain");
    Vec shift(w0_tilde.size());
    for (std::size_t i = 0; i < w0_tilde.size(); ++i) shift[i] = f.h(w0_tilde[i]);
    const Vec nu0(a.rows, 0.0);  // start at z = w0_tilde
    return detail::dual_newton(a, upsilon, shift, detail::family_dual_map(f), opts, nu0);
}

/// Minimizer of ||z||_p^p over {z : a z = upsilon} for p in (1,2], via the
/// same dual machinery with map phi(z) = sign(z)|z|^{p-1}. Initialized from
/// the min-norm least-squares point (nu = 0 sits at z = 0 where the dual
/// Jacobian vanishes for p < 2).
inline OracleSolution lp_min(const Mat& a, const Vec& upsilon, double p,
                             const SolveOptions& opts = {}) {
    if (!(p > 1.0 && p <= 2.0))
        throw std::invalid_argument("lp_min requires p in (1,2]");
    const Vec shift(a.cols, 0.0);
    const auto map = detail::lp_dual_map(p);
    const Vec zls = pinv_solve(a, upsilon);
    Vec target(a.cols);
    for (std::size_t i = 0; i < a.cols; ++i) target[i] = map.phi(zls[i]);
    const Vec nu0 = pinv_solve(transpose(a), target);
    return detail::dual_newton(a, upsilon, shift, map, opts, nu0);
}

/// Independent reference for 1x2 instances: parametrizes the solution line
/// z(s) = z_particular + s * null_direction, scans a coarse grid and refines
/// by golden-section search.
inline Vec brute_force_line(const Mat& a, const Vec& upsilon,
                            const std::function<double(const Vec&)>& objective) {
    if (a.rows != 1 || a.cols != 2)
        throw std::invalid_argument("brute_force_line: expects a 1x2 system");
    if (sigma_min_nonzero(a).rank != 1)
        throw std::invalid_argument("brute_force_line: expects rank 1");
    const Vec z_part = pinv_solve(a, upsilon);
    const auto kernel = null_basis(a);
    if (kernel.size() != 1) throw std::invalid_argument("brute_force_line: kernel dimension != 1");
    const Vec dir = kernel.front();

    auto point = [&](double s) { return z_part + s * dir; };
    auto f = [&](double s) { return objective(point(s)); };

    const int grid_points = 10000;
    const double lo = -100.0, hi = 100.0;
    double best_s = lo, best_v = f(lo);
    int best_idx = 0;
    for (int i = 1; i <= grid_points; ++i) {
        const double s = lo + (hi - lo) * i / grid_points;
        const double v = f(s);
        if (v < best_v) {
            best_v = v;
            best_s = s;
            best_idx = i;
        }
    }
    if (best_idx == 0 || best_idx == grid_points)
        throw std::runtime_error("brute_force_line: grid minimum at boundary (objective not coercive?)");

    const double spacing = (hi - lo) / grid_points;
    double gl = best_s - spacing, gr = best_s + spacing;
    const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = gr - golden * (gr - gl), x2 = gl + golden * (gr - gl);
    double f1 = f(x1), f2 = f(x2);
    while (gr - gl > 1e-10) {
        if (f1 < f2) {
            gr = x2;
            x2 = x1;
            f2 = f1;
            x1 = gr - golden * (gr - gl);
            f1 = f(x1);
        } else {
            gl = x1;
            x1 = x2;
            f1 = f2;
            x2 = gl + golden * (gr - gl);
            f2 = f(x2);
        }
    }
    return point(0.5 * (gl + gr));
}

/// Moore-Penrose solution of a z = upsilon.
inline Vec min_norm_least_squares(const Mat& a, const Vec& upsilon) {
    return pinv_solve(a, upsilon);
}

}  // namespace rgf
