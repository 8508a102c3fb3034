#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "rgf/model.hpp"

namespace rgf {

struct EulerMethod {
    double step = 1e-4;
};
struct Rk4Method {
    double step = 1e-3;
};
struct AdaptiveRk45 {
    double rtol = 1e-8;
    double atol = 1e-10;
    double initial_step = 1e-3;
};

using FlowMethod = std::variant<EulerMethod, Rk4Method, AdaptiveRk45>;

struct LogSchedule {
    enum class Tag { EveryStep, Geometric };
    Tag tag = Tag::Geometric;
    double ratio = 1.05;

    static LogSchedule every_step() { return {Tag::EveryStep, 0.0}; }
    static LogSchedule geometric(double ratio = 1.05) {
        if (!(ratio > 1.0)) throw std::invalid_argument("geometric log schedule requires ratio > 1");
        return {Tag::Geometric, ratio};
    }
};

struct FlowConfig {
    FlowMethod method = AdaptiveRk45{};
    double t_max = 1e6;
    double loss_tol = 1e-10;
    double divergence_bound = 1e8;
    LogSchedule log = LogSchedule::geometric();

    void validate() const {
        if (!(t_max > 0.0)) throw std::invalid_argument("flow config: t_max must be positive");
        if (!(loss_tol >= 0.0)) throw std::invalid_argument("flow config: loss_tol must be >= 0");
        if (!(divergence_bound > 0.0))
            throw std::invalid_argument("flow config: divergence_bound must be positive");
        if (const auto* e = std::get_if<EulerMethod>(&method)) {
            if (!(e->step > 0.0)) throw std::invalid_argument("flow config: step must be positive");
        } else if (const auto* r = std::get_if<Rk4Method>(&method)) {
            if (!(r->step > 0.0)) throw std::invalid_argument("flow config: step must be positive");
        } else if (const auto* a = std::get_if<AdaptiveRk45>(&method)) {
            if (!(a->rtol > 0.0 && a->rtol < 1.0 && a->atol > 0.0 && a->atol < 1.0))
                throw std::invalid_argument("flow config: rtol and atol must lie in (0,1)");
            if (!(a->initial_step > 0.0))
                throw std::invalid_argument("flow config: initial step must be positive");
        }
    }

    /// Slack model for sample-to-sample monotonicity checks: relative plus
    /// absolute per accepted step.
    double slack_rel() const {
        if (const auto* a = std::get_if<AdaptiveRk45>(&method)) return a->rtol;
        return 0.0;
    }
    double slack_abs_per_step() const {
        if (const auto* a = std::get_if<AdaptiveRk45>(&method)) return a->atol;
        return 1e-9;
    }
};

enum class Terminal { LossTol, TMax, Diverged, BoundaryHit };

inline const char* to_string(Terminal t) {
    switch (t) {
        case Terminal::LossTol: return "loss_tol";
        case Terminal::TMax: return "t_max";
        case Terminal::Diverged: return "diverged";
        case Terminal::BoundaryHit: return "boundary_hit";
    }
    return "?";
}

struct TrajectorySample {
    double t = 0.0;
    Vec w;
    Vec w_tilde;
    double loss = 0.0;
    double min_abs_rho_prime = 0.0;
    std::uint64_t steps = 0;  // accepted integrator steps up to this sample
};

struct RegularityEvent {
    double t = 0.0;
    std::size_t coordinate = 0;
};

struct Trajectory {
    std::vector<TrajectorySample> samples;
    Terminal terminal = Terminal::TMax;
    std::vector<RegularityEvent> events;
};

struct flow_error : std::runtime_error {
    double last_valid_t;
    explicit flow_error(const std::string& msg, double t)
        : std::runtime_error(msg + " (last valid sample at t = " + std::to_string(t) + ")"),
          last_valid_t(t) {}
};

namespace detail {

struct Stepper {
    const ProblemInstance& inst;

    Vec rhs(const Vec& w) const {
        Vec g = full_grad(inst, w);
        for (double& x : g) x = -x;
        return g;
    }

    void euler(Vec& w, double h) const {
        const Vec f = rhs(w);
        for (std::size_t i = 0; i < w.size(); ++i) w[i] += h * f[i];
    }

    void rk4(Vec& w, double h) const {
        const std::size_t n = w.size();
        const Vec k1 = rhs(w);
        Vec tmp(n);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = w[i] + 0.5 * h * k1[i];
        const Vec k2 = rhs(tmp);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = w[i] + 0.5 * h * k2[i];
        const Vec k3 = rhs(tmp);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = w[i] + h * k3[i];
        const Vec k4 = rhs(tmp);
        for (std::size_t i = 0; i < n; ++i)
            w[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }

    // Dormand-Prince 5(4) pair. Returns the scaled error norm of the trial
    // step; the caller accepts when it is <= 1.
    double dopri5(const Vec& w, double h, Vec& w_out, double rtol, double atol) const {
        static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
        static constexpr double a21 = 1.0 / 5;
        static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
        static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
        static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                                a53 = 64448.0 / 6561, a54 = -212.0 / 729;
        static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                                a64 = 49.0 / 176, a65 = -5103.0 / 18656;
        static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                                b5 = -2187.0 / 6784, b6 = 11.0 / 84;
        static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600,
                                e3 = 500.0 / 1113 - 7571.0 / 16695,
                                e4 = 125.0 / 192 - 393.0 / 640,
                                e5 = -2187.0 / 6784 + 92097.0 / 339200,
                                e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;
        (void)c2;
        (void)c3;
        (void)c4;
        (void)c5;

        const std::size_t n = w.size();
        Vec tmp(n);
        const Vec k1 = rhs(w);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = w[i] + h * a21 * k1[i];
        const Vec k2 = rhs(tmp);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = w[i] + h * (a31 * k1[i] + a32 * k2[i]);
        const Vec k3 = rhs(tmp);
        for (std::size_t i = 0; i < n; ++i)
            tmp[i] = w[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        const Vec k4 = rhs(tmp);
        for (std::size_t i = 0; i < n; ++i)
            tmp[i] = w[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        const Vec k5 = rhs(tmp);
        for (std::size_t i = 0; i < n; ++i)
            tmp[i] = w[i] +
                     h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        const Vec k6 = rhs(tmp);

        w_out.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            w_out[i] = w[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] +
                                   b6 * k6[i]);
        const Vec k7 = rhs(w_out);

        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                  e6 * k6[i] + e7 * k7[i]);
            const double sc = atol + rtol * std::max(std::abs(w[i]), std::abs(w_out[i]));
            err = std::max(err, std::abs(e) / sc);
        }
        return err;
    }
};

}  // namespace detail

/// Integrates w'(t) = -grad(w(t)) from inst.w0 until the loss drops below
/// cfg.loss_tol, t reaches cfg.t_max, the iterate diverges, or the
/// reparametrized iterate hits the domain boundary. Near-critical
/// reparametrization derivatives and sign crossings through an interior
/// critical point are logged as regularity events.
inline Trajectory integrate(const ProblemInstance& inst, const FlowConfig& cfg) {
    inst.validate();
    cfg.validate();

    constexpr double critical_tol = 1e-12;
    constexpr std::size_t max_events = 100000;

    Trajectory traj;
    detail::Stepper stepper{inst};
    const std::size_t n = inst.n();

    Vec w = inst.w0;
    double t = 0.0;
    std::uint64_t steps = 0;

    auto make_sample = [&](double tt, const Vec& ww) {
        TrajectorySample s;
        s.t = tt;
        s.w = ww;
        s.w_tilde = inst.reparametrize(ww);
        s.loss = inst.loss_tilde(s.w_tilde);
        double mn = std::numeric_limits<double>::infinity();
        for (double wi : ww) mn = std::min(mn, std::abs(inst.reparam.derivative(wi)));
        s.min_abs_rho_prime = mn;
        s.steps = steps;
        return s;
    };

    TrajectorySample cur = make_sample(0.0, w);
    traj.samples.push_back(cur);
    if (cur.loss <= cfg.loss_tol) {
        traj.terminal = Terminal::LossTol;
        return traj;
    }

    const bool adaptive = std::holds_alternative<AdaptiveRk45>(cfg.method);
    double h = 0.0;
    if (const auto* e = std::get_if<EulerMethod>(&cfg.method)) h = e->step;
    if (const auto* r = std::get_if<Rk4Method>(&cfg.method)) h = r->step;
    if (const auto* a = std::get_if<AdaptiveRk45>(&cfg.method)) h = a->initial_step;

    std::vector<bool> in_band(n, false);
    double next_log_t = 0.0;

    while (true) {
        const double h_step = std::min(h, cfg.t_max - t);
        Vec w_new = w;
        bool accepted = true;
        if (adaptive) {
            const auto& ark = std::get<AdaptiveRk45>(cfg.method);
            const double err = stepper.dopri5(w, h_step, w_new, ark.rtol, ark.atol);
            const double grow = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
            accepted = err <= 1.0;
            if (accepted) {
                h = h_step * std::clamp(grow, 0.2, 5.0);
            } else {
                h = h_step * std::clamp(grow, 0.1, 0.9);
                if (h < 1e-15 * std::max(1.0, t))
                    throw flow_error("integrator stalled: step size underflow", t);
                continue;
            }
        } else if (std::holds_alternative<EulerMethod>(cfg.method)) {
            stepper.euler(w_new, h_step);
        } else {
            stepper.rk4(w_new, h_step);
        }

        if (!all_finite(w_new)) throw flow_error("integrator produced nonfinite state", t);

        ++steps;
        const double t_new = t + h_step;

        // regularity events: near-critical derivative or a sign crossing
        // through the interior critical point of the map
        if (traj.events.size() < max_events) {
            for (std::size_t i = 0; i < n; ++i) {
                const bool near = std::abs(inst.reparam.derivative(w_new[i])) < critical_tol;
                const bool crossed = inst.reparam.has_interior_critical_point() &&
                                     ((w[i] > 0.0 && w_new[i] < 0.0) ||
                                      (w[i] < 0.0 && w_new[i] > 0.0));
                if ((near && !in_band[i]) || crossed)
                    traj.events.push_back({t_new, i});
                in_band[i] = near;
            }
        }

        w = std::move(w_new);
        t = t_new;

        const double loss = full_loss(inst, w);
        double winf = norm_inf(w);
        bool boundary = false;
        if (inst.reparam.bounded_domain()) {
            for (double wi : w)
                if (std::abs(inst.reparam.apply(wi)) >= 1.0) boundary = true;
        }

        const bool done_loss = loss <= cfg.loss_tol;
        const bool done_tmax = t >= cfg.t_max * (1.0 - 1e-14);
        const bool done_div = winf > cfg.divergence_bound;

        bool log_now = cfg.log.tag == LogSchedule::Tag::EveryStep || t >= next_log_t;
        if (done_loss || done_tmax || done_div || boundary) log_now = true;
        if (log_now) {
            traj.samples.push_back(make_sample(t, w));
            if (cfg.log.tag == LogSchedule::Tag::Geometric) next_log_t = t * cfg.log.ratio;
        }

        if (done_loss) {
            traj.terminal = Terminal::LossTol;
            break;
        }
        if (boundary) {
            traj.terminal = Terminal::BoundaryHit;
            break;
        }
        if (done_div) {
            traj.terminal = Terminal::Diverged;
            break;
        }
        if (done_tmax) {
            traj.terminal = Terminal::TMax;
            break;
        }
    }
    return traj;
}

inline std::vector<RegularityEvent> regularity_report(const Trajectory& traj) {
    return traj.events;
}

/// Infimum over the recorded samples of 1/h'(w_tilde_i), evaluated as
/// rho'(w_i)^2, which stays finite even where h' diverges.
inline double min_hprime_inv(const Trajectory& traj) {
    if (traj.samples.empty()) throw std::invalid_argument("min_hprime_inv: empty trajectory");
    double r = std::numeric_limits<double>::infinity();
    for (const auto& s : traj.samples)
        r = std::min(r, s.min_abs_rho_prime * s.min_abs_rho_prime);
    return r;
}

}  // namespace rgf
