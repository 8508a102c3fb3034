#pragma once

#include <filesystem>
#include <string>

#include "rgf/oracle.hpp"
#include "rgf/report_io.hpp"
#include "rgf/verify.hpp"

namespace rgf {

/// Gradient descent with learning rate 1e-4 initialized at the uniform
/// reparametrized scale alpha = 1e-4; the two standard one-row instances.
inline ProblemInstance fig1a_instance() {
    ProblemInstance inst;
    inst.a = Mat(1, 2, {-0.7, 1.0});
    inst.y = {2.0};
    inst.link = LinkKind::Identity;
    inst.loss = LossKind::power(1.1);
    inst.reparam = ReparamFamily::power(1.2);
    inst.w0.assign(2, inst.reparam.inverse(1e-4));
    return inst;
}

inline ProblemInstance fig1b_instance() {
    ProblemInstance inst;
    inst.a = Mat(1, 2, {-0.7, -1.0});
    inst.y = {2.0};
    inst.link = LinkKind::Identity;
    inst.loss = LossKind::squared_l2();
    inst.reparam = ReparamFamily::power(1.8);
    inst.w0.assign(2, inst.reparam.inverse(1e-4));
    return inst;
}

inline FlowConfig fig_flow_config() {
    FlowConfig cfg;
    cfg.method = EulerMethod{1e-4};
    cfg.t_max = 30.0;
    cfg.loss_tol = 1e-10;
    cfg.log = LogSchedule::geometric();
    return cfg;
}

/// Ground-truth integrator for continuous-flow claims.
inline FlowConfig adaptive_flow_config(double loss_tol = 1e-16, double t_max = 1e6) {
    FlowConfig cfg;
    cfg.method = AdaptiveRk45{1e-8, 1e-10, 1e-3};
    cfg.t_max = t_max;
    cfg.loss_tol = loss_tol;
    cfg.log = LogSchedule::geometric();
    return cfg;
}

/// Writes the figure data for one of the three bundled figures into out_dir:
/// fig1a/fig1b emit the gradient-descent trajectory CSV plus the p-norm ball
/// radius of the final iterate; fig2 emits the g_sinh/Huber table.
inline void emit_figure_data(const std::string& kind, const std::filesystem::path& out_dir) {
    if (kind == "fig2") {
        atomic_write(out_dir / "fig2_huber_comparison.csv",
                     huber_table_csv(run_huber_comparison()));
        return;
    }
    if (kind != "fig1a" && kind != "fig1b")
        throw std::invalid_argument("emit: unknown figure \"" + kind + "\"");
    const ProblemInstance inst = kind == "fig1a" ? fig1a_instance() : fig1b_instance();
    const FlowConfig cfg = fig_flow_config();
    const ExperimentRun run = run_bias_agreement_full(inst, cfg);

    atomic_write(out_dir / (kind + "_trajectory.csv"),
                 trajectory_csv(run.trajectory, inst.reparam, &run.report.oracle_z_star));

    detail::JsonWriter w;
    w.field("p", inst.reparam.p);
    w.field("lp_ball_radius", lp_norm(run.report.w_tilde_final, inst.reparam.p));
    w.field("lp_min_radius", run.report.lp_norm_oracle.value_or(0.0));
    w.field("final_loss", run.report.flow_final_loss);
    w.field("terminal", std::string(to_string(run.report.terminal)));
    atomic_write(out_dir / (kind + "_lp_ball.json"), w.str());
}

}  // namespace rgf
