#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include "rgf/linalg.hpp"
#include "rgf/reparam.hpp"

namespace rgf {

/// Data-fit term. SquaredL2 is the q = 2 power loss kept as its own case so
/// the classical identities (gradient 2(z-y), PL constant 2) are exact.
struct LossKind {
    enum class Tag { SquaredL2, Power };
    Tag tag = Tag::SquaredL2;
    double q = 2.0;

    static LossKind squared_l2() { return {Tag::SquaredL2, 2.0}; }
    static LossKind power(double q) {
        if (!(q > 1.0)) throw std::invalid_argument("power loss requires q > 1");
        return {Tag::Power, q};
    }
};

inline const char* to_string(LossKind::Tag t) {
    return t == LossKind::Tag::SquaredL2 ? "squared_l2" : "power";
}

inline double loss_value(const LossKind& l, const Vec& z, const Vec& y) {
    if (z.size() != y.size()) throw std::invalid_argument("loss_value: length mismatch");
    double s = 0.0;
    if (l.tag == LossKind::Tag::SquaredL2) {
        for (std::size_t i = 0; i < z.size(); ++i) {
            const double r = z[i] - y[i];
            s += r * r;
        }
    } else {
        for (std::size_t i = 0; i < z.size(); ++i)
            s += std::pow(std::abs(z[i] - y[i]), l.q);
    }
    return s;
}

inline Vec loss_grad(const LossKind& l, const Vec& z, const Vec& y) {
    if (z.size() != y.size()) throw std::invalid_argument("loss_grad: length mismatch");
    Vec g(z.size(), 0.0);
    if (l.tag == LossKind::Tag::SquaredL2) {
        for (std::size_t i = 0; i < z.size(); ++i) g[i] = 2.0 * (z[i] - y[i]);
    } else {
        // q > 1 makes the gradient continuous with value 0 at ties.
        for (std::size_t i = 0; i < z.size(); ++i) {
            const double r = z[i] - y[i];
            g[i] = r == 0.0 ? 0.0 : l.q * sgn(r) * std::pow(std::abs(r), l.q - 1.0);
        }
    }
    return g;
}

/// Polyak-Lojasiewicz constant mu with ||grad L||^2 >= 2*mu*L, when one is
/// known globally. For the squared loss ||2(z-y)||^2 = 4 L gives mu = 2;
/// power losses with q != 2 carry no global constant.
inline std::optional<double> pl_constant(const LossKind& l) {
    if (l.tag == LossKind::Tag::SquaredL2 || l.q == 2.0) return 2.0;
    return std::nullopt;
}

enum class LinkKind { Identity, Cubic };

inline const char* to_string(LinkKind k) {
    return k == LinkKind::Identity ? "identity" : "cubic";
}

inline double link_apply(LinkKind k, double v) {
    return k == LinkKind::Identity ? v : v + v * v * v;
}

inline double link_derivative(LinkKind k, double v) {
    return k == LinkKind::Identity ? 1.0 : 1.0 + 3.0 * v * v;
}

inline double link_inverse(LinkKind k, double v) {
    if (k == LinkKind::Identity) return v;
    // Strictly increasing cubic: Newton from a cube-root seed, bisection
    // safeguard. The derivative is >= 1 so convergence is fast.
    double lo = -std::abs(v) - 1.0, hi = std::abs(v) + 1.0;
    double x = std::cbrt(v);
    for (int it = 0; it < 100; ++it) {
        const double res = link_apply(k, x) - v;
        if (std::abs(res) <= 1e-12 * std::max(1.0, std::abs(v))) return x;
        if (res > 0.0)
            hi = x;
        else
            lo = x;
        double xn = x - res / link_derivative(k, x);
        if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
        x = xn;
    }
    throw std::runtime_error("link_inverse: Newton failed to converge");
}

inline Vec link_inverse(LinkKind k, const Vec& v) {
    Vec out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = link_inverse(k, v[i]);
    return out;
}

/// One regression problem: data (a, y), link, loss, reparametrization and
/// the initialization w0 in parameter space.
struct ProblemInstance {
    Mat a;
    Vec y;
    LinkKind link = LinkKind::Identity;
    LossKind loss = LossKind::squared_l2();
    ReparamFamily reparam = ReparamFamily::identity();
    Vec w0;

    std::size_t m() const { return a.rows; }
    std::size_t n() const { return a.cols; }

    void validate() const {
        if (y.size() != a.rows) throw std::invalid_argument("instance: y length != rows of a");
        if (w0.size() != a.cols) throw std::invalid_argument("instance: w0 length != cols of a");
        if (!a.finite() || !all_finite(y) || !all_finite(w0))
            throw std::invalid_argument("instance: nonfinite data");
        for (double yi : y) link_inverse(link, yi);  // y must be in the link image
        if (reparam.has_interior_critical_point()) {
            for (double w : w0)
                if (reparam.derivative(w) == 0.0)
                    throw std::invalid_argument(
                        "instance: initialization sits at a critical point of the "
                        "reparametrization (power family saddle)");
        }
    }

    Vec reparametrize(const Vec& w) const {
        Vec zt(w.size());
        for (std::size_t i = 0; i < w.size(); ++i) zt[i] = reparam.apply(w[i]);
        return zt;
    }

    /// Loss in the reparametrized variable, L(link(a zt), y).
    double loss_tilde(const Vec& z_tilde) const {
        Vec v = matvec(a, z_tilde);
        for (double& x : v) x = link_apply(link, x);
        return loss_value(loss, v, y);
    }
};

inline double full_loss(const ProblemInstance& inst, const Vec& w) {
    if (w.size() != inst.n()) throw std::invalid_argument("full_loss: dimension mismatch");
    return inst.loss_tilde(inst.reparametrize(w));
}

/// Chain-rule gradient of w -> L(link(a rho(w)), y).
inline Vec full_grad(const ProblemInstance& inst, const Vec& w) {
    if (w.size() != inst.n()) throw std::invalid_argument("full_grad: dimension mismatch");
    const Vec zt = inst.reparametrize(w);
    const Vec v = matvec(inst.a, zt);
    Vec lv(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) lv[i] = link_apply(inst.link, v[i]);
    Vec gl = loss_grad(inst.loss, lv, inst.y);
    for (std::size_t i = 0; i < v.size(); ++i) gl[i] *= link_derivative(inst.link, v[i]);
    Vec g = matvec_t(inst.a, gl);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= inst.reparam.derivative(w[i]);
    return g;
}

}  // namespace rgf
