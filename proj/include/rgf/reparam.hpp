#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace rgf {

inline double sgn(double x) { return (x > 0.0) - (x < 0.0); }

enum class ReparamKind { Identity, Power, Sinh, Tanh };

inline const char* to_string(ReparamKind k) {
    switch (k) {
        case ReparamKind::Identity: return "identity";
        case ReparamKind::Power: return "power";
        case ReparamKind::Sinh: return "sinh";
        case ReparamKind::Tanh: return "tanh";
    }
    return "?";
}

/// A strictly increasing reparametrization map rho together with the pieces
/// of its induced mirror potential: h' = ([rho^{-1}]')^2, its antiderivative
/// h (normalized h(0) = 0), the convex potential H (H' = h, H(0) = 0), and
/// the inverse of h. All four supported maps have closed forms except the
/// tanh h^{-1}, which is solved by safeguarded Newton.
///
/// Domains: identity/power/sinh act on all reals; tanh maps onto (-1, 1).
/// Extended values: H returns +infinity at the tanh boundary; callers treat
/// infinities as in-band values, not errors.
struct ReparamFamily {
    ReparamKind kind = ReparamKind::Identity;
    double p = 0.0;  // exponent for Power, 1 < p < 2

    static ReparamFamily identity() { return {ReparamKind::Identity, 0.0}; }
    static ReparamFamily power(double p) {
        if (!(p > 1.0 && p < 2.0))
            throw std::invalid_argument("power reparametrization requires p in (1,2)");
        return {ReparamKind::Power, p};
    }
    static ReparamFamily sinh() { return {ReparamKind::Sinh, 0.0}; }
    static ReparamFamily tanh() { return {ReparamKind::Tanh, 0.0}; }

    bool bounded_domain() const { return kind == ReparamKind::Tanh; }
    /// Power is the only map in scope whose derivative vanishes somewhere
    /// (at the origin).
    bool has_interior_critical_point() const { return kind == ReparamKind::Power; }

    bool in_domain(double zt) const { return !bounded_domain() || std::abs(zt) < 1.0; }
    bool in_domain_closure(double zt) const { return !bounded_domain() || std::abs(zt) <= 1.0; }

    /// Range of h: all reals except sinh, whose h = arctan saturates at pi/2.
    double h_range_halfwidth() const {
        return kind == ReparamKind::Sinh ? std::asin(1.0)  // pi/2
                                         : std::numeric_limits<double>::infinity();
    }

    double apply(double z) const {
        switch (kind) {
            case ReparamKind::Identity: return z;
            case ReparamKind::Power: return sgn(z) * std::pow(std::abs(z), 2.0 / p);
            case ReparamKind::Sinh: return std::sinh(z);
            case ReparamKind::Tanh: return std::tanh(z);
        }
        return 0.0;
    }

    double derivative(double z) const {
        switch (kind) {
            case ReparamKind::Identity: return 1.0;
            case ReparamKind::Power:
                return (2.0 / p) * std::pow(std::abs(z), (2.0 - p) / p);
            case ReparamKind::Sinh: return std::cosh(z);
            case ReparamKind::Tanh: {
                const double th = std::tanh(z);
                return 1.0 - th * th;
            }
        }
        return 0.0;
    }

    double inverse(double zt) const {
        switch (kind) {
            case ReparamKind::Identity: return zt;
            case ReparamKind::Power: return sgn(zt) * std::pow(std::abs(zt), p / 2.0);
            case ReparamKind::Sinh: return std::asinh(zt);
            case ReparamKind::Tanh:
                if (std::abs(zt) >= 1.0)
                    throw std::domain_error("tanh inverse: argument outside (-1,1)");
                return std::atanh(zt);
        }
        return 0.0;
    }

    double h_prime(double zt) const {
        switch (kind) {
            case ReparamKind::Identity: return 1.0;
            case ReparamKind::Power:
                if (zt == 0.0)
                    throw std::domain_error("power h': singular at 0");
                return (p * p / 4.0) * std::pow(std::abs(zt), p - 2.0);
            case ReparamKind::Sinh: return 1.0 / (1.0 + zt * zt);
            case ReparamKind::Tanh: {
                if (std::abs(zt) >= 1.0)
                    throw std::domain_error("tanh h': argument outside (-1,1)");
                const double d = 1.0 - zt * zt;
                return 1.0 / (d * d);
            }
        }
        return 0.0;
    }

    double h(double zt) const {
        switch (kind) {
            case ReparamKind::Identity: return zt;
            case ReparamKind::Power:
                return (p * p / (4.0 * (p - 1.0))) * sgn(zt) * std::pow(std::abs(zt), p - 1.0);
            case ReparamKind::Sinh: return std::atan(zt);
            case ReparamKind::Tanh:
                if (std::abs(zt) >= 1.0)
                    throw std::domain_error("tanh h: argument outside (-1,1)");
                return 0.5 * (std::atanh(zt) + zt / (1.0 - zt * zt));
        }
        return 0.0;
    }

    /// Convex potential with H(0) = 0. At the tanh boundary |zt| = 1 the
    /// continuous extension is +infinity, returned in-band.
    double H(double zt) const {
        switch (kind) {
            case ReparamKind::Identity: return 0.5 * zt * zt;
            case ReparamKind::Power:
                return (p / (4.0 * (p - 1.0))) * std::pow(std::abs(zt), p);
            case ReparamKind::Sinh: {
                // log(1+z^2)/2 written to survive z^2 overflow
                const double az = std::abs(zt);
                const double halflog = az < 1.0 ? 0.5 * std::log1p(zt * zt)
                                                : std::log(az) + 0.5 * std::log1p(1.0 / (zt * zt));
                return zt * std::atan(zt) - halflog;
            }
            case ReparamKind::Tanh: {
                const double az = std::abs(zt);
                if (az > 1.0)
                    throw std::domain_error("tanh H: argument outside [-1,1]");
                if (az == 1.0) return std::numeric_limits<double>::infinity();
                if (zt == 0.0) return 0.0;
                return 0.5 * zt * std::atanh(zt);
            }
        }
        return 0.0;
    }

    double h_inverse(double v) const {
        switch (kind) {
            case ReparamKind::Identity: return v;
            case ReparamKind::Power:
                return sgn(v) * std::pow(4.0 * (p - 1.0) * std::abs(v) / (p * p),
                                         1.0 / (p - 1.0));
            case ReparamKind::Sinh:
                if (std::abs(v) >= h_range_halfwidth())
                    throw std::range_error("sinh h^{-1}: argument outside (-pi/2, pi/2)");
                return std::tan(v);
            case ReparamKind::Tanh: return tanh_h_inverse(v);
        }
        return 0.0;
    }

private:
    // Safeguarded Newton with a shrinking bracket on (-1, 1); h is steep near
    // the boundary so unguarded Newton can overshoot the interval. Falls back
    // to pure bisection after 60 Newton iterations.
    double tanh_h_inverse(double v) const {
        if (v == 0.0) return 0.0;
        const double one_minus = std::nextafter(1.0, 0.0);
        double lo = v > 0.0 ? 0.0 : -one_minus;
        double hi = v > 0.0 ? one_minus : 0.0;
        double z = std::clamp(v > 0.0 ? std::min(v, 0.5) : std::max(v, -0.5), lo, hi);
        int newton_left = 60;
        for (int it = 0; it < 50000; ++it) {
            const double res = h(z) - v;
            if (std::abs(res) <= 1e-12) return z;
            if (res > 0.0)
                hi = z;
            else
                lo = z;
            double znew;
            if (newton_left > 0) {
                --newton_left;
                const double d = 1.0 - z * z;
                znew = z - res * d * d;  // step / h'(z)
                if (!(znew > lo && znew < hi)) znew = 0.5 * (lo + hi);
            } else {
                znew = 0.5 * (lo + hi);
            }
            if (znew == z || hi - lo <= std::numeric_limits<double>::epsilon() *
                                            std::max(std::abs(lo), std::abs(hi)))
                return z;  // bracket exhausted at double resolution
            z = znew;
        }
        return z;
    }
};

}  // namespace rgf
