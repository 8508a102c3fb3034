#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "rgf/report_io.hpp"
#include "rgf/verify.hpp"

namespace rgf {

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A fully parsed run configuration. The on-disk format is JSON with the
/// schema documented in the README; unknown keys anywhere are rejected.
struct RunConfig {
    ProblemInstance instance;
    FlowConfig flow;
    SolveOptions oracle;
    std::string trajectory_csv;
    std::string report_json_path;
    std::optional<std::string> figure_data_dir;
    std::uint64_t seed = 0;

    static RunConfig parse_file(const std::filesystem::path& path);
    static RunConfig parse(const nlohmann::json& j, const std::filesystem::path& base_dir);
};

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& j, const std::string& where,
                           const std::set<std::string>& allowed) {
    if (!j.is_object()) throw config_error(where + ": expected an object");
    for (const auto& [key, _] : j.items())
        if (!allowed.count(key)) throw config_error(where + ": unknown key \"" + key + "\"");
}

inline const json& require(const json& j, const std::string& where, const std::string& key) {
    if (!j.contains(key)) throw config_error(where + ": missing key \"" + key + "\"");
    return j.at(key);
}

inline double num(const json& j, const std::string& where) {
    if (!j.is_number()) throw config_error(where + ": expected a number");
    return j.get<double>();
}

inline Vec vec(const json& j, const std::string& where) {
    if (!j.is_array()) throw config_error(where + ": expected an array of numbers");
    Vec v;
    for (const auto& x : j) v.push_back(num(x, where));
    return v;
}

inline Mat matrix_from_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw config_error("matrix csv: cannot open " + path.string());
    std::vector<Vec> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        Vec row;
        while (std::getline(ls, cell, ',')) {
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str())
                throw config_error("matrix csv line " + std::to_string(lineno) +
                                   ": not a number: \"" + cell + "\"");
            row.push_back(v);
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw config_error("matrix csv line " + std::to_string(lineno) + ": ragged row");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw config_error("matrix csv: empty file " + path.string());
    Mat m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows.front().size(); ++j) m(i, j) = rows[i][j];
    return m;
}

inline Mat parse_matrix(const json& j, const std::filesystem::path& base_dir) {
    if (j.is_object()) {
        reject_unknown(j, "matrix", {"csv"});
        const auto& p = require(j, "matrix", "csv");
        if (!p.is_string()) throw config_error("matrix.csv: expected a path string");
        std::filesystem::path file = p.get<std::string>();
        if (file.is_relative()) file = base_dir / file;
        return matrix_from_csv(file);
    }
    if (!j.is_array() || j.empty()) throw config_error("matrix: expected inline rows or {\"csv\": path}");
    std::vector<Vec> rows;
    for (const auto& r : j) rows.push_back(vec(r, "matrix row"));
    Mat m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.front().size()) throw config_error("matrix: ragged rows");
        for (std::size_t k = 0; k < rows.front().size(); ++k) m(i, k) = rows[i][k];
    }
    return m;
}

inline ReparamFamily parse_reparam(const json& j) {
    reject_unknown(j, "reparam", {"kind", "p"});
    const auto kind = require(j, "reparam", "kind").get<std::string>();
    if (kind == "identity") return ReparamFamily::identity();
    if (kind == "sinh") return ReparamFamily::sinh();
    if (kind == "tanh") return ReparamFamily::tanh();
    if (kind == "power") {
        const double p = num(require(j, "reparam", "p"), "reparam.p");
        if (!(p > 1.0 && p < 2.0)) throw config_error("reparam: p outside (1,2)");
        return ReparamFamily::power(p);
    }
    throw config_error("reparam: unknown kind \"" + kind + "\"");
}

inline LossKind parse_loss(const json& j) {
    reject_unknown(j, "loss", {"kind", "q"});
    const auto kind = require(j, "loss", "kind").get<std::string>();
    if (kind == "squared_l2") return LossKind::squared_l2();
    if (kind == "power") {
        const double q = num(require(j, "loss", "q"), "loss.q");
        if (!(q > 1.0)) throw config_error("loss: q must be > 1");
        return LossKind::power(q);
    }
    throw config_error("loss: unknown kind \"" + kind + "\"");
}

inline LinkKind parse_link(const json& j) {
    if (!j.is_string()) throw config_error("link: expected \"identity\" or \"cubic\"");
    const auto s = j.get<std::string>();
    if (s == "identity") return LinkKind::Identity;
    if (s == "cubic") return LinkKind::Cubic;
    throw config_error("link: unknown kind \"" + s + "\"");
}

inline FlowConfig parse_integrator(const json& j) {
    reject_unknown(j, "integrator",
                   {"method", "step", "rtol", "atol", "initial_step", "t_max", "loss_tol",
                    "divergence_bound", "log"});
    FlowConfig cfg;
    const auto method = require(j, "integrator", "method").get<std::string>();
    if (method == "euler") {
        EulerMethod m;
        m.step = num(require(j, "integrator", "step"), "integrator.step");
        cfg.method = m;
    } else if (method == "rk4") {
        Rk4Method m;
        m.step = num(require(j, "integrator", "step"), "integrator.step");
        cfg.method = m;
    } else if (method == "adaptive_rk45") {
        AdaptiveRk45 m;
        if (j.contains("rtol")) m.rtol = num(j.at("rtol"), "integrator.rtol");
        if (j.contains("atol")) m.atol = num(j.at("atol"), "integrator.atol");
        if (j.contains("initial_step"))
            m.initial_step = num(j.at("initial_step"), "integrator.initial_step");
        cfg.method = m;
    } else {
        throw config_error("integrator: unknown method \"" + method + "\"");
    }
    cfg.t_max = num(require(j, "integrator", "t_max"), "integrator.t_max");
    if (j.contains("loss_tol")) cfg.loss_tol = num(j.at("loss_tol"), "integrator.loss_tol");
    if (j.contains("divergence_bound"))
        cfg.divergence_bound = num(j.at("divergence_bound"), "integrator.divergence_bound");
    if (j.contains("log")) {
        const auto& lj = j.at("log");
        reject_unknown(lj, "integrator.log", {"schedule", "ratio"});
        const auto sched = require(lj, "integrator.log", "schedule").get<std::string>();
        if (sched == "every_step")
            cfg.log = LogSchedule::every_step();
        else if (sched == "geometric")
            cfg.log = LogSchedule::geometric(
                lj.contains("ratio") ? num(lj.at("ratio"), "integrator.log.ratio") : 1.05);
        else
            throw config_error("integrator.log: unknown schedule \"" + sched + "\"");
    }
    try {
        cfg.validate();
    } catch (const std::exception& e) {
        throw config_error(std::string("integrator: ") + e.what());
    }
    return cfg;
}

}  // namespace detail

inline RunConfig RunConfig::parse(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    using detail::num;
    using detail::require;
    detail::reject_unknown(
        j, "config",
        {"matrix", "y", "reparam", "link", "loss", "init", "integrator", "oracle", "outputs",
         "seed"});
    RunConfig cfg;
    cfg.instance.a = detail::parse_matrix(require(j, "config", "matrix"), base_dir);
    cfg.instance.y = detail::vec(require(j, "config", "y"), "y");
    cfg.instance.reparam = detail::parse_reparam(require(j, "config", "reparam"));
    cfg.instance.link = detail::parse_link(require(j, "config", "link"));
    cfg.instance.loss = detail::parse_loss(require(j, "config", "loss"));

    const auto& init = require(j, "config", "init");
    detail::reject_unknown(init, "init", {"alpha", "w0"});
    if (init.contains("alpha") == init.contains("w0"))
        throw config_error("init: exactly one of \"alpha\" (reparametrized scale) or \"w0\" "
                           "(parameter-space vector) is required");
    if (init.contains("alpha")) {
        const double alpha = num(init.at("alpha"), "init.alpha");
        if (!(alpha >= 0.0)) throw config_error("init.alpha must be nonnegative");
        if (!cfg.instance.reparam.in_domain(alpha))
            throw config_error("init.alpha outside the reparametrized domain");
        cfg.instance.w0.assign(cfg.instance.a.cols, cfg.instance.reparam.inverse(alpha));
    } else {
        cfg.instance.w0 = detail::vec(init.at("w0"), "init.w0");
    }

    cfg.flow = detail::parse_integrator(require(j, "config", "integrator"));

    if (j.contains("oracle")) {
        const auto& oj = j.at("oracle");
        detail::reject_unknown(oj, "oracle",
                               {"tol", "max_iter", "damping", "jacobian_regularization"});
        if (oj.contains("tol")) cfg.oracle.tol = num(oj.at("tol"), "oracle.tol");
        if (oj.contains("max_iter")) cfg.oracle.max_iter = oj.at("max_iter").get<int>();
        if (oj.contains("damping")) cfg.oracle.damping = num(oj.at("damping"), "oracle.damping");
        if (oj.contains("jacobian_regularization"))
            cfg.oracle.jacobian_regularization =
                num(oj.at("jacobian_regularization"), "oracle.jacobian_regularization");
        if (!(cfg.oracle.tol > 0.0) || cfg.oracle.max_iter < 1)
            throw config_error("oracle: tol must be positive and max_iter >= 1");
    }

    const auto& outputs = require(j, "config", "outputs");
    detail::reject_unknown(outputs, "outputs",
                           {"trajectory_csv", "report_json", "figure_data_dir"});
    cfg.trajectory_csv = require(outputs, "outputs", "trajectory_csv").get<std::string>();
    cfg.report_json_path = require(outputs, "outputs", "report_json").get<std::string>();
    if (outputs.contains("figure_data_dir"))
        cfg.figure_data_dir = outputs.at("figure_data_dir").get<std::string>();

    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();

    try {
        cfg.instance.validate();
    } catch (const std::exception& e) {
        throw config_error(std::string("instance: ") + e.what());
    }
    return cfg;
}

inline RunConfig RunConfig::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error("config parse error in " + path.string() + ": " + e.what());
    }
    return parse(j, path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

/// Output directory override, used by the runner for all emitted files.
inline std::filesystem::path output_dir_override() {
    if (const char* env = std::getenv("RGF_OUTPUT_DIR")) return std::filesystem::path(env);
    return {};
}

inline std::filesystem::path resolve_output(const std::string& name) {
    const auto dir = output_dir_override();
    if (dir.empty()) return std::filesystem::path(name);
    return dir / std::filesystem::path(name).filename();
}

/// Exit codes: 0 all checks pass, 2 an inequality check failed, 1 on
/// configuration or solver errors.
inline int run_config(const std::filesystem::path& config_path, std::ostream& log = std::cerr) {
    RunConfig cfg;
    try {
        cfg = RunConfig::parse_file(config_path);
    } catch (const std::exception& e) {
        log << "config error: " << e.what() << "\n";
        return 1;
    }
    try {
        const ExperimentRun run = run_bias_agreement_full(cfg.instance, cfg.flow, cfg.oracle);
        const ExperimentReport& rep = run.report;
        atomic_write(resolve_output(cfg.trajectory_csv),
                     trajectory_csv(run.trajectory, cfg.instance.reparam, &rep.oracle_z_star));
        atomic_write(resolve_output(cfg.report_json_path), report_json(rep));
        log << "run " << config_path.filename().string() << ": " << rep.instance_summary
            << "\n  terminal=" << to_string(rep.terminal) << " final_loss=" << rep.flow_final_loss
            << " agreement=" << rep.agreement_linf << "\n  flow " << rep.runtime_flow_seconds
            << " s, oracle " << rep.runtime_oracle_seconds << " s\n";
        for (const auto& c : rep.checks) {
            log << "  check " << c.name << ": "
                << (!c.applicable ? "n/a" : c.pass ? "pass" : "FAIL");
            if (c.applicable) log << " (margin " << c.margin << ")";
            if (!c.note.empty()) log << " [" << c.note << "]";
            log << "\n";
        }
        return rep.all_checks_pass() ? 0 : 2;
    } catch (const std::exception& e) {
        log << "run error: " << e.what() << "\n";
        detail::JsonWriter w;
        w.field("error", std::string(e.what()));
        try {
            atomic_write(resolve_output(cfg.report_json_path), w.str());
        } catch (...) {
        }
        return 1;
    }
}

}  // namespace rgf
