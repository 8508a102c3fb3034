#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace rgf {

using Vec = std::vector<double>;

inline bool all_finite(const Vec& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(const Vec& a) {
    double m = 0.0;
    for (double x : a) m = std::max(m, std::abs(x));
    return m;
}

inline double lp_norm(const Vec& a, double p) {
    double s = 0.0;
    for (double x : a) s += std::pow(std::abs(x), p);
    return std::pow(s, 1.0 / p);
}

inline Vec operator+(Vec a, const Vec& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
}

inline Vec operator-(Vec a, const Vec& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
    return a;
}

inline Vec operator*(double s, Vec a) {
    for (double& x : a) x *= s;
    return a;
}

/// Dense row-major matrix. All numerics in this library are desk scale
/// (dimensions up to a few hundred), so everything is kept dense.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(std::size_t m, std::size_t n, double fill = 0.0) : rows(m), cols(n), a(m * n, fill) {
        if (m < 1 || n < 1) throw std::invalid_argument("Mat: dimensions must be positive");
    }
    Mat(std::size_t m, std::size_t n, std::initializer_list<double> entries)
        : rows(m), cols(n), a(entries) {
        if (a.size() != m * n) throw std::invalid_argument("Mat: entry count mismatch");
    }

    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

    static Mat identity(std::size_t n) {
        Mat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    bool finite() const {
        return std::all_of(a.begin(), a.end(), [](double x) { return std::isfinite(x); });
    }
};

inline Mat transpose(const Mat& m) {
    Mat t(m.cols, m.rows);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) t(j, i) = m(i, j);
    return t;
}

inline Vec matvec(const Mat& m, const Vec& x) {
    if (x.size() != m.cols) throw std::invalid_argument("matvec: dimension mismatch");
    Vec y(m.rows, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j) s += m(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

inline Vec matvec_t(const Mat& m, const Vec& x) {
    if (x.size() != m.rows) throw std::invalid_argument("matvec_t: dimension mismatch");
    Vec y(m.cols, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) y[j] += m(i, j) * x[i];
    return y;
}

/// Thin SVD, a = u * diag(sigma) * v^T with sigma sorted descending.
/// u is rows x k, v is cols x k, k = min(rows, cols). Columns of u
/// belonging to zero singular values are left as zero vectors.
struct Svd {
    Mat u;
    Vec sigma;
    Mat v;
};

namespace detail {

// One-sided Jacobi (Hestenes) on the columns of a tall matrix.
inline Svd svd_tall(Mat m) {
    const std::size_t nr = m.rows, nc = m.cols;
    Mat v = Mat::identity(nc);
    const double eps = std::numeric_limits<double>::epsilon();

    auto col_dot = [&](std::size_t p, std::size_t q) {
        double s = 0.0;
        for (std::size_t i = 0; i < nr; ++i) s += m(i, p) * m(i, q);
        return s;
    };

    for (int sweep = 0; sweep < 128; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < nc; ++p) {
            for (std::size_t q = p + 1; q < nc; ++q) {
                const double app = col_dot(p, p);
                const double aqq = col_dot(q, q);
                const double apq = col_dot(p, q);
                if (std::abs(apq) <= eps * std::sqrt(app * aqq) || apq == 0.0) continue;
                rotated = true;
                const double zeta = (aqq - app) / (2.0 * apq);
                const double t = (zeta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < nr; ++i) {
                    const double mp = m(i, p), mq = m(i, q);
                    m(i, p) = c * mp - s * mq;
                    m(i, q) = s * mp + c * mq;
                }
                for (std::size_t i = 0; i < nc; ++i) {
                    const double vp = v(i, p), vq = v(i, q);
                    v(i, p) = c * vp - s * vq;
                    v(i, q) = s * vp + c * vq;
                }
            }
        }
        if (!rotated) break;
    }

    Vec sigma(nc, 0.0);
    for (std::size_t j = 0; j < nc; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < nr; ++i) s += m(i, j) * m(i, j);
        sigma[j] = std::sqrt(s);
    }

    std::vector<std::size_t> order(nc);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return sigma[i] > sigma[j]; });

    Svd out;
    out.u = Mat(nr, nc);
    out.v = Mat(nc, nc);
    out.sigma.resize(nc);
    for (std::size_t jj = 0; jj < nc; ++jj) {
        const std::size_t j = order[jj];
        out.sigma[jj] = sigma[j];
        if (sigma[j] > 0.0)
            for (std::size_t i = 0; i < nr; ++i) out.u(i, jj) = m(i, j) / sigma[j];
        for (std::size_t i = 0; i < nc; ++i) out.v(i, jj) = v(i, j);
    }
    return out;
}

}  // namespace detail

inline Svd svd(const Mat& m) {
    if (!m.finite()) throw std::invalid_argument("svd: nonfinite entries");
    if (m.rows >= m.cols) return detail::svd_tall(m);
    Svd t = detail::svd_tall(transpose(m));
    return Svd{std::move(t.v), std::move(t.sigma), std::move(t.u)};
}

/// Numerical-rank tolerance: max(M,N) * machine epsilon * largest singular value.
inline double rank_tolerance(const Mat& m, const Vec& sigma) {
    const double smax = sigma.empty() ? 0.0 : sigma.front();
    return static_cast<double>(std::max(m.rows, m.cols)) *
           std::numeric_limits<double>::epsilon() * smax;
}

struct SpectralInfo {
    double sigma_min_nonzero = 0.0;
    std::size_t rank = 0;
};

inline SpectralInfo sigma_min_nonzero(const Mat& m) {
    const Svd s = svd(m);
    const double tol = rank_tolerance(m, s.sigma);
    SpectralInfo info;
    for (double sv : s.sigma) {
        if (sv > tol) {
            ++info.rank;
            info.sigma_min_nonzero = sv;  // sigma is sorted descending
        }
    }
    if (info.rank == 0)
        throw std::domain_error("zero matrix has no nonzero singular value");
    return info;
}

/// Moore-Penrose solution of a x = b (minimum-norm least squares).
inline Vec pinv_solve(const Mat& a, const Vec& b) {
    if (b.size() != a.rows) throw std::invalid_argument("pinv_solve: dimension mismatch");
    const Svd s = svd(a);
    const double tol = rank_tolerance(a, s.sigma);
    Vec x(a.cols, 0.0);
    for (std::size_t k = 0; k < s.sigma.size(); ++k) {
        if (s.sigma[k] <= tol) continue;
        double ub = 0.0;
        for (std::size_t i = 0; i < a.rows; ++i) ub += s.u(i, k) * b[i];
        const double c = ub / s.sigma[k];
        for (std::size_t j = 0; j < a.cols; ++j) x[j] += c * s.v(j, k);
    }
    return x;
}

/// Orthonormal basis of the null space of a. Right singular vectors beyond
/// the numerical rank span ker(a); for M < N the thin v does not carry all
/// kernel directions, so the basis is completed by Gram-Schmidt.
inline std::vector<Vec> null_basis(const Mat& a) {
    const Svd s = svd(a);
    const double tol = rank_tolerance(a, s.sigma);
    std::size_t rank = 0;
    for (double sv : s.sigma)
        if (sv > tol) ++rank;
    const std::size_t dim = a.cols - rank;
    std::vector<Vec> basis;
    for (std::size_t k = rank; k < s.sigma.size(); ++k) {
        Vec col(a.cols);
        for (std::size_t i = 0; i < a.cols; ++i) col[i] = s.v(i, k);
        basis.push_back(std::move(col));
    }
    for (std::size_t e = 0; e < a.cols && basis.size() < dim; ++e) {
        Vec cand(a.cols, 0.0);
        cand[e] = 1.0;
        for (std::size_t k = 0; k < rank; ++k) {
            double proj = 0.0;
            for (std::size_t i = 0; i < a.cols; ++i) proj += cand[i] * s.v(i, k);
            for (std::size_t i = 0; i < a.cols; ++i) cand[i] -= proj * s.v(i, k);
        }
        for (const Vec& bvec : basis) {
            const double proj = dot(cand, bvec);
            for (std::size_t i = 0; i < a.cols; ++i) cand[i] -= proj * bvec[i];
        }
        const double nrm = norm2(cand);
        if (nrm > 1e-8) {
            for (double& x : cand) x /= nrm;
            basis.push_back(std::move(cand));
        }
    }
    if (basis.size() != dim) throw std::runtime_error("null_basis: completion failed");
    return basis;
}

/// Residual of x after projecting out the row space of a, i.e.
/// (I - V_r V_r^T) x with V_r the right singular vectors above the rank
/// tolerance.
inline Vec rowspace_complement(const Mat& a, const Vec& x) {
    if (x.size() != a.cols) throw std::invalid_argument("rowspace_complement: dimension mismatch");
    const Svd s = svd(a);
    const double tol = rank_tolerance(a, s.sigma);
    Vec r = x;
    for (std::size_t k = 0; k < s.sigma.size(); ++k) {
        if (s.sigma[k] <= tol) continue;
        double proj = 0.0;
        for (std::size_t i = 0; i < a.cols; ++i) proj += x[i] * s.v(i, k);
        for (std::size_t i = 0; i < a.cols; ++i) r[i] -= proj * s.v(i, k);
    }
    return r;
}

/// Gaussian elimination with partial pivoting for small square systems.
inline Vec solve_square(Mat m, Vec b) {
    if (m.rows != m.cols || b.size() != m.rows)
        throw std::invalid_argument("solve_square: dimension mismatch");
    const std::size_t n = m.rows;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(m(i, k)) > std::abs(m(piv, k))) piv = i;
        if (m(piv, k) == 0.0) throw std::runtime_error("solve_square: singular matrix");
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(m(k, j), m(piv, j));
            std::swap(b[k], b[piv]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = m(i, k) / m(k, k);
            if (f == 0.0) continue;
            for (std::size_t j = k; j < n; ++j) m(i, j) -= f * m(k, j);
            b[i] -= f * b[k];
        }
    }
    Vec x(n, 0.0);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t j = ii + 1; j < n; ++j) s -= m(ii, j) * x[j];
        x[ii] = s / m(ii, ii);
    }
    return x;
}

}  // namespace rgf
