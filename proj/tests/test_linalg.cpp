#include <catch2/catch_amalgamated.hpp>

#include "rgf/linalg.hpp"
#include "rgf/rng.hpp"

using namespace rgf;
using Catch::Approx;

namespace {

// Closed-form eigenvalues of a symmetric 3x3 matrix via the characteristic
// cubic (trigonometric method). Independent of the Jacobi SVD.
std::array<double, 3> sym3_eigenvalues(const Mat& b) {
    REQUIRE(b.rows == 3);
    REQUIRE(b.cols == 3);
    const double q = (b(0, 0) + b(1, 1) + b(2, 2)) / 3.0;
    const double p1 = b(0, 1) * b(0, 1) + b(0, 2) * b(0, 2) + b(1, 2) * b(1, 2);
    const double p2 = (b(0, 0) - q) * (b(0, 0) - q) + (b(1, 1) - q) * (b(1, 1) - q) +
                      (b(2, 2) - q) * (b(2, 2) - q) + 2.0 * p1;
    if (p2 == 0.0) return {q, q, q};
    const double p = std::sqrt(p2 / 6.0);
    Mat m(3, 3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) m(i, j) = (b(i, j) - (i == j ? q : 0.0)) / p;
    const double det = m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
                       m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
                       m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
    const double r = std::clamp(det / 2.0, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    const double pi = 2.0 * std::asin(1.0);
    const double e1 = q + 2.0 * p * std::cos(phi);
    const double e3 = q + 2.0 * p * std::cos(phi + 2.0 * pi / 3.0);
    return {e1, 3.0 * q - e1 - e3, e3};
}

Mat gram(const Mat& a) {
    Mat g(a.rows, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.rows; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) s += a(i, k) * a(j, k);
            g(i, j) = s;
        }
    return g;
}

}  // namespace

TEST_CASE("sigma_min_nonzero on pinned matrices") {
    SECTION("identity 2x2") {
        const auto info = sigma_min_nonzero(Mat::identity(2));
        CHECK(info.sigma_min_nonzero == Approx(1.0).epsilon(1e-14));
        CHECK(info.rank == 2);
    }
    SECTION("single row (-0.7, 1)") {
        const Mat a(1, 2, {-0.7, 1.0});
        const auto info = sigma_min_nonzero(a);
        CHECK(info.sigma_min_nonzero == Approx(std::sqrt(1.49)).epsilon(1e-14));
        CHECK(info.rank == 1);
    }
    SECTION("rank-deficient diag(3, 0)") {
        const Mat a(2, 2, {3.0, 0.0, 0.0, 0.0});
        const auto info = sigma_min_nonzero(a);
        CHECK(info.sigma_min_nonzero == Approx(3.0));
        CHECK(info.rank == 1);
    }
    SECTION("zero matrix") {
        CHECK_THROWS_WITH(sigma_min_nonzero(Mat(2, 2, 0.0)),
                          "zero matrix has no nonzero singular value");
    }
}

TEST_CASE("sigma_min^2 matches the characteristic-polynomial eigenvalues of the Gram matrix") {
    // 3x5 shapes: the 3x3 Gram a a^T has the same nonzero spectrum as a^T a.
    for (std::uint64_t seed : {11u, 12u, 13u, 14u, 15u}) {
        Rng rng(seed);
        const Mat a = rng.gaussian(3, 5);
        const auto info = sigma_min_nonzero(a);
        const auto eigs = sym3_eigenvalues(gram(a));
        double smallest_nonzero = std::numeric_limits<double>::infinity();
        for (double e : eigs)
            if (e > 1e-10) smallest_nonzero = std::min(smallest_nonzero, e);
        CHECK(info.sigma_min_nonzero * info.sigma_min_nonzero ==
              Approx(smallest_nonzero).epsilon(1e-10));
    }
}

TEST_CASE("svd factors and reconstructs") {
    for (auto [m, n] : {std::pair<std::size_t, std::size_t>{4, 3}, {3, 4}, {1, 2}, {5, 5}}) {
        Rng rng(100 + m * 10 + n);
        const Mat a = rng.gaussian(m, n);
        const Svd s = svd(a);
        const std::size_t k = std::min(m, n);
        REQUIRE(s.sigma.size() == k);
        for (std::size_t i = 0; i + 1 < k; ++i) CHECK(s.sigma[i] >= s.sigma[i + 1]);
        // reconstruction
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                double x = 0.0;
                for (std::size_t c = 0; c < k; ++c) x += s.u(i, c) * s.sigma[c] * s.v(j, c);
                CHECK(x == Approx(a(i, j)).margin(1e-12));
            }
        // orthonormal columns
        for (std::size_t c = 0; c < k; ++c)
            for (std::size_t d = 0; d < k; ++d) {
                double uu = 0.0, vv = 0.0;
                for (std::size_t i = 0; i < m; ++i) uu += s.u(i, c) * s.u(i, d);
                for (std::size_t i = 0; i < n; ++i) vv += s.v(i, c) * s.v(i, d);
                CHECK(uu == Approx(c == d ? 1.0 : 0.0).margin(1e-12));
                CHECK(vv == Approx(c == d ? 1.0 : 0.0).margin(1e-12));
            }
    }
}

TEST_CASE("pinv_solve satisfies the normal equations and kernel orthogonality") {
    Rng rng(42);
    const Mat a = rng.gaussian(2, 4);
    const Vec b = rng.normal_vec(2);
    const Vec x = pinv_solve(a, b);
    const Vec atres = matvec_t(a, matvec(a, x) - b);
    CHECK(norm_inf(atres) < 1e-10);
    for (const Vec& nd : null_basis(a)) CHECK(std::abs(dot(x, nd)) < 1e-10);
}

TEST_CASE("null_basis spans the kernel") {
    Rng rng(7);
    const Mat a = rng.gaussian(2, 5);
    const auto basis = null_basis(a);
    REQUIRE(basis.size() == 3);
    for (const Vec& v : basis) {
        CHECK(norm2(v) == Approx(1.0).epsilon(1e-10));
        CHECK(norm_inf(matvec(a, v)) < 1e-10);
    }
}

TEST_CASE("rowspace_complement annihilates row-space vectors") {
    Rng rng(8);
    const Mat a = rng.gaussian(2, 4);
    const Vec coeff = rng.normal_vec(2);
    const Vec in_row = matvec_t(a, coeff);
    CHECK(norm_inf(rowspace_complement(a, in_row)) < 1e-10);
    for (const Vec& nd : null_basis(a))
        CHECK(norm_inf(rowspace_complement(a, nd) - nd) < 1e-10);
}

TEST_CASE("solve_square inverts small systems") {
    Rng rng(9);
    const Mat a = rng.gaussian(4, 4);
    const Vec x_true = rng.normal_vec(4);
    const Vec x = solve_square(a, matvec(a, x_true));
    CHECK(norm_inf(x - x_true) < 1e-10);
}
