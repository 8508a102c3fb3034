#pragma once

#include <chrono>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rgf/bias.hpp"
#include "rgf/flow.hpp"
#include "rgf/model.hpp"
#include "rgf/oracle.hpp"

namespace rgf {

struct CheckOutcome {
    std::string name;
    bool applicable = true;
    bool pass = true;
    double margin = 0.0;
    std::string note;
};

struct AlphaBoundRow {
    double alpha = 0.0;
    bool valid = false;  // alpha below the admissibility threshold
    double rhs = 0.0;
    double lp_norm_final = 0.0;
    double margin = 0.0;
    bool skipped = false;
};

/// Everything one experiment produces: the flow endpoint, the independent
/// constrained minimizer, agreement between the two, and the outcome of every
/// inequality check with its margin.
struct ExperimentReport {
    std::string instance_summary;
    std::size_t m = 0, n = 0;

    Terminal terminal = Terminal::TMax;
    bool reached_loss_tol = false;  // incomplete when false
    double flow_final_loss = 0.0;
    double flow_final_t = 0.0;
    Vec w_tilde_final;

    Vec oracle_z_star;
    Vec oracle_dual;
    double oracle_kkt_primal = 0.0;
    double oracle_kkt_stationarity = 0.0;
    int oracle_iterations = 0;

    double agreement_linf = 0.0;

    // p-norm section, populated for the power family with uniform positive
    // initialization
    std::optional<double> lp_p;
    std::optional<double> lp_norm_flow;
    std::optional<double> lp_norm_oracle;  // mu, from the independent lp oracle
    std::optional<double> lp_bound_rhs;
    std::optional<bool> lp_bound_valid;

    std::vector<AlphaBoundRow> alpha_sweep;

    std::vector<CheckOutcome> checks;
    std::size_t regularity_event_count = 0;

    double runtime_flow_seconds = 0.0;    // never serialized: outputs are
    double runtime_oracle_seconds = 0.0;  // byte-reproducible across runs

    bool all_checks_pass() const {
        for (const auto& c : checks)
            if (c.applicable && !c.pass) return false;
        return true;
    }

    const CheckOutcome* find_check(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline std::string summarize(const ProblemInstance& inst) {
    std::ostringstream os;
    os << "reparam=" << to_string(inst.reparam.kind);
    if (inst.reparam.kind == ReparamKind::Power) os << "(" << inst.reparam.p << ")";
    os << " loss=" << to_string(inst.loss.tag);
    if (inst.loss.tag == LossKind::Tag::Power) os << "(" << inst.loss.q << ")";
    os << " link=" << to_string(inst.link) << " m=" << inst.m() << " n=" << inst.n();
    return os.str();
}

inline std::optional<double> uniform_positive_alpha(const Vec& w0_tilde) {
    if (w0_tilde.empty() || !(w0_tilde.front() > 0.0)) return std::nullopt;
    for (double x : w0_tilde)
        if (x != w0_tilde.front()) return std::nullopt;
    return w0_tilde.front();
}

}  // namespace detail

struct ExperimentRun {
    ExperimentReport report;
    Trajectory trajectory;
};

/// Integrates the flow, solves the same constrained problem with the
/// KKT/dual-Newton oracle, and verifies every inequality that applies to the
/// instance (divergence decay, sublinear rate, linear rate under a PL loss,
/// tanh confinement box, p-norm bound).
inline ExperimentRun run_bias_agreement_full(const ProblemInstance& inst, const FlowConfig& cfg,
                                             const SolveOptions& opts = {}) {
    inst.validate();
    ExperimentReport rep;
    rep.instance_summary = detail::summarize(inst);
    rep.m = inst.m();
    rep.n = inst.n();

    const Vec upsilon = link_inverse(inst.link, inst.y);
    const Vec w0_tilde = inst.reparametrize(inst.w0);

    auto t0 = std::chrono::steady_clock::now();
    const Trajectory traj = integrate(inst, cfg);
    rep.runtime_flow_seconds = detail::seconds_since(t0);

    rep.terminal = traj.terminal;
    rep.reached_loss_tol = traj.terminal == Terminal::LossTol;
    rep.flow_final_loss = traj.samples.back().loss;
    rep.flow_final_t = traj.samples.back().t;
    rep.w_tilde_final = traj.samples.back().w_tilde;
    rep.regularity_event_count = traj.events.size();

    t0 = std::chrono::steady_clock::now();
    const OracleSolution sol = bregman_projection(inst.reparam, inst.a, upsilon, w0_tilde, opts);
    rep.runtime_oracle_seconds = detail::seconds_since(t0);

    rep.oracle_z_star = sol.z_star;
    rep.oracle_dual = sol.dual;
    rep.oracle_kkt_primal = sol.kkt_residual_primal;
    rep.oracle_kkt_stationarity = sol.kkt_residual_stationarity;
    rep.oracle_iterations = sol.iterations;
    rep.agreement_linf = norm_inf(rep.w_tilde_final - sol.z_star);

    const bool rate_theory_applies = inst.link == LinkKind::Identity;

    if (rate_theory_applies) {
        const RateCheckResult decay = check_decay(traj, inst.reparam, inst.a, upsilon, sol.z_star,
                                                  cfg.slack_rel(), cfg.slack_abs_per_step());
        rep.checks.push_back({"decay", true, decay.holds, decay.worst_margin, ""});

        const RateCheckResult sub =
            check_sublinear_rate(traj, inst.reparam, inst.a, upsilon, sol.z_star);
        rep.checks.push_back({"sublinear_rate", true, sub.holds, sub.worst_margin, ""});

        const auto mu = pl_constant(inst.loss);
        const double r = min_hprime_inv(traj);
        if (mu && r > 0.0) {
            const double smin = sigma_min_nonzero(inst.a).sigma_min_nonzero;
            const RateCheckResult lin = check_linear_rate(traj, *mu, smin);
            rep.checks.push_back({"linear_rate", true, lin.holds, lin.worst_margin, ""});
        } else {
            rep.checks.push_back({"linear_rate", false, true, 0.0,
                                  mu ? "1/h' vanishes on the trajectory" : "loss has no PL constant"});
        }
    } else {
        rep.checks.push_back({"decay", false, true, 0.0, "non-identity link"});
        rep.checks.push_back({"sublinear_rate", false, true, 0.0, "non-identity link"});
        rep.checks.push_back({"linear_rate", false, true, 0.0, "non-identity link"});
    }

    if (inst.reparam.kind == ReparamKind::Tanh) {
        bool nonzero = true;
        for (double z : sol.z_star)
            if (std::abs(z) < 1e-12) nonzero = false;
        if (nonzero) {
            const double d0 = bregman_divergence(inst.reparam, sol.z_star, w0_tilde);
            const TanhBox box = tanh_box_bounds(sol.z_star, d0);
            double worst = std::numeric_limits<double>::infinity();
            for (const auto& s : traj.samples)
                for (std::size_t i = 0; i < s.w_tilde.size(); ++i)
                    worst = std::min({worst, s.w_tilde[i] - box.gamma_minus[i],
                                      box.gamma_plus[i] - s.w_tilde[i]});
            rep.checks.push_back({"tanh_box", true, worst >= 0.0, worst, ""});
        } else {
            rep.checks.push_back(
                {"tanh_box", false, true, 0.0, "reference point has a zero coordinate"});
        }
    }

    if (inst.reparam.kind == ReparamKind::Power) {
        const double p = inst.reparam.p;
        rep.lp_p = p;
        rep.lp_norm_flow = lp_norm(rep.w_tilde_final, p);
        const OracleSolution lps = lp_min(inst.a, upsilon, p, opts);
        rep.lp_norm_oracle = lp_norm(lps.z_star, p);
        if (const auto alpha = detail::uniform_positive_alpha(w0_tilde)) {
            const LpBound b = lp_bound(p, inst.n(), *alpha, *rep.lp_norm_oracle);
            rep.lp_bound_rhs = b.rhs;
            rep.lp_bound_valid = b.valid;
            if (b.valid) {
                const double margin = b.rhs - *rep.lp_norm_flow;
                rep.checks.push_back({"lp_bound", true, margin >= 0.0, margin, ""});
            } else {
                rep.checks.push_back(
                    {"lp_bound", false, true, 0.0, "alpha exceeds the admissibility threshold"});
            }
        }
    }

    return {std::move(rep), traj};
}

inline ExperimentReport run_bias_agreement(const ProblemInstance& inst, const FlowConfig& cfg,
                                           const SolveOptions& opts = {}) {
    return run_bias_agreement_full(inst, cfg, opts).report;
}

/// Runs the flow from w0_tilde = alpha * 1 for every admissible alpha and
/// verifies the one-sided p-norm bound, plus monotonicity of the bound in
/// alpha. Inadmissible alphas are recorded as skipped.
inline ExperimentReport run_lp_bound_check(double p, const Mat& a, const Vec& y,
                                           const Vec& alpha_list, const LossKind& loss,
                                           const FlowConfig& cfg) {
    const ReparamFamily fam = ReparamFamily::power(p);
    ExperimentReport rep;
    rep.m = a.rows;
    rep.n = a.cols;
    rep.lp_p = p;

    const OracleSolution lps = lp_min(a, y, p);
    const double mu = lp_norm(lps.z_star, p);
    rep.lp_norm_oracle = mu;
    rep.oracle_z_star = lps.z_star;

    bool all_hold = true;
    double prev_rhs = std::numeric_limits<double>::infinity();
    bool rhs_monotone = true;
    double prev_alpha = std::numeric_limits<double>::infinity();

    for (double alpha : alpha_list) {
        AlphaBoundRow row;
        row.alpha = alpha;
        const LpBound b = lp_bound(p, a.cols, alpha, mu);
        row.valid = b.valid;
        row.rhs = b.rhs;
        if (!b.valid) {
            row.skipped = true;
            rep.alpha_sweep.push_back(row);
            continue;
        }
        ProblemInstance inst;
        inst.a = a;
        inst.y = y;
        inst.link = LinkKind::Identity;
        inst.loss = loss;
        inst.reparam = fam;
        inst.w0.assign(a.cols, fam.inverse(alpha));
        const Trajectory traj = integrate(inst, cfg);
        row.lp_norm_final = lp_norm(traj.samples.back().w_tilde, p);
        row.margin = row.rhs - row.lp_norm_final;
        if (row.margin < 0.0) all_hold = false;
        if (alpha < prev_alpha && !(row.rhs <= prev_rhs)) rhs_monotone = false;
        prev_rhs = row.rhs;
        prev_alpha = alpha;
        rep.alpha_sweep.push_back(row);
    }
    rep.checks.push_back({"lp_bound_sweep", true, all_hold,
                          all_hold ? 0.0 : -1.0, ""});
    rep.checks.push_back({"lp_bound_rhs_monotone", true, rhs_monotone,
                          rhs_monotone ? 0.0 : -1.0, ""});
    rep.instance_summary = "lp bound sweep, " + detail::summarize(ProblemInstance{
        a, y, LinkKind::Identity, loss, fam, Vec(a.cols, 1.0)});
    return rep;
}

struct HuberRow {
    double t = 0.0;
    double g_sinh_value = 0.0;
    double huber_value = 0.0;
};

inline Vec make_grid(double lo, double hi, std::size_t points) {
    Vec g(points);
    for (std::size_t i = 0; i < points; ++i)
        g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    return g;
}

/// Tabulates g_sinh against the Huber function with knee pi/2 over the grid
/// (default [-6, 6] with 601 points).
inline std::vector<HuberRow> run_huber_comparison(const Vec& grid) {
    const double delta = 2.0 * std::asin(1.0) / 2.0;  // pi/2
    std::vector<HuberRow> rows;
    rows.reserve(grid.size());
    for (double t : grid) rows.push_back({t, g_sinh(t), huber(t, delta)});
    return rows;
}

inline std::vector<HuberRow> run_huber_comparison() {
    return run_huber_comparison(make_grid(-6.0, 6.0, 601));
}

}  // namespace rgf
