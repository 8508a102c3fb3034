#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rgf/bias.hpp"
#include "rgf/flow.hpp"
#include "rgf/verify.hpp"

namespace rgf {

/// All numbers in emitted files use 17 significant digits, enough for an
/// exact double round trip.
inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// Writes content to path atomically: temp file in the same directory, then
/// rename.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    fs::create_directories(dir);
    const fs::path tmp = dir / (path.filename().string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out << content;
        if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

/// Trajectory CSV, fixed column order:
/// t, w_1..w_N, wt_1..wt_N, loss, bregman_to_ref, min_abs_rho_prime.
/// bregman_to_ref is D_F(z_ref, w_tilde) when a reference is given, nan rows
/// otherwise.
inline std::string trajectory_csv(const Trajectory& traj, const ReparamFamily& fam,
                                  const Vec* z_ref = nullptr) {
    if (traj.samples.empty()) throw std::invalid_argument("trajectory_csv: empty trajectory");
    const std::size_t n = traj.samples.front().w.size();
    std::ostringstream os;
    os << "t";
    for (std::size_t i = 1; i <= n; ++i) os << ",w_" << i;
    for (std::size_t i = 1; i <= n; ++i) os << ",wt_" << i;
    os << ",loss,bregman_to_ref,min_abs_rho_prime\n";
    for (const auto& s : traj.samples) {
        os << fmt17(s.t);
        for (double x : s.w) os << "," << fmt17(x);
        for (double x : s.w_tilde) os << "," << fmt17(x);
        os << "," << fmt17(s.loss);
        const double d = z_ref ? bregman_divergence(fam, *z_ref, s.w_tilde)
                               : std::numeric_limits<double>::quiet_NaN();
        os << "," << fmt17(d);
        os << "," << fmt17(s.min_abs_rho_prime) << "\n";
    }
    return os.str();
}

struct CsvTrajectoryRow {
    double t;
    Vec w;
    Vec w_tilde;
    double loss;
    double bregman_to_ref;
    double min_abs_rho_prime;
};

inline std::vector<CsvTrajectoryRow> parse_trajectory_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("trajectory csv: missing header");
    std::size_t ncols = 1;
    for (char c : line) ncols += c == ',';
    if (ncols < 5 || (ncols - 4) % 2 != 0)
        throw std::runtime_error("trajectory csv: unexpected column count");
    const std::size_t n = (ncols - 4) / 2;
    std::vector<CsvTrajectoryRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(ls, cell, ',')) vals.push_back(std::strtod(cell.c_str(), nullptr));
        if (vals.size() != ncols) throw std::runtime_error("trajectory csv: ragged row");
        CsvTrajectoryRow r;
        r.t = vals[0];
        r.w.assign(vals.begin() + 1, vals.begin() + 1 + n);
        r.w_tilde.assign(vals.begin() + 1 + n, vals.begin() + 1 + 2 * n);
        r.loss = vals[1 + 2 * n];
        r.bregman_to_ref = vals[2 + 2 * n];
        r.min_abs_rho_prime = vals[3 + 2 * n];
        rows.push_back(std::move(r));
    }
    return rows;
}

namespace detail {

/// Minimal flat JSON writer; keys are emitted in insertion order so outputs
/// are byte-reproducible.
class JsonWriter {
public:
    void field(const std::string& key, double v) { raw(key, fmt17(v)); }
    void field(const std::string& key, int v) { raw(key, std::to_string(v)); }
    void field(const std::string& key, std::size_t v) { raw(key, std::to_string(v)); }
    void field(const std::string& key, bool v) { raw(key, v ? "true" : "false"); }
    void field(const std::string& key, const std::string& v) { raw(key, quote(v)); }
    void field(const std::string& key, const Vec& v) {
        std::string s = "[";
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) s += ",";
            s += fmt17(v[i]);
        }
        raw(key, s + "]");
    }

    std::string str() const { return "{\n" + body_ + "\n}\n"; }

private:
    static std::string quote(const std::string& s) {
        std::string out = "\"";
        for (char c : s) {
            if (c == '"' || c == '\\') out += '\\';
            if (c == '\n') {
                out += "\\n";
                continue;
            }
            out += c;
        }
        return out + "\"";
    }
    void raw(const std::string& key, const std::string& value) {
        if (!body_.empty()) body_ += ",\n";
        body_ += "  " + quote(key) + ": " + value;
    }
    std::string body_;
};

}  // namespace detail

/// Flat JSON serialization of an experiment report. Runtimes are deliberately
/// omitted so repeated runs produce byte-identical files.
inline std::string report_json(const ExperimentReport& rep) {
    detail::JsonWriter w;
    w.field("instance", rep.instance_summary);
    w.field("m", rep.m);
    w.field("n", rep.n);
    w.field("terminal", std::string(to_string(rep.terminal)));
    w.field("reached_loss_tol", rep.reached_loss_tol);
    w.field("flow_final_t", rep.flow_final_t);
    w.field("flow_final_loss", rep.flow_final_loss);
    w.field("w_tilde_final", rep.w_tilde_final);
    w.field("oracle_z_star", rep.oracle_z_star);
    w.field("oracle_dual", rep.oracle_dual);
    w.field("oracle_kkt_primal", rep.oracle_kkt_primal);
    w.field("oracle_kkt_stationarity", rep.oracle_kkt_stationarity);
    w.field("oracle_iterations", rep.oracle_iterations);
    w.field("agreement_linf", rep.agreement_linf);
    w.field("regularity_event_count", rep.regularity_event_count);
    if (rep.lp_p) {
        w.field("lp_p", *rep.lp_p);
        if (rep.lp_norm_flow) w.field("lp_norm_flow", *rep.lp_norm_flow);
        if (rep.lp_norm_oracle) w.field("lp_norm_oracle", *rep.lp_norm_oracle);
        if (rep.lp_bound_rhs) w.field("lp_bound_rhs", *rep.lp_bound_rhs);
        if (rep.lp_bound_valid) w.field("lp_bound_valid", *rep.lp_bound_valid);
    }
    for (const auto& c : rep.checks) {
        w.field("check_" + c.name + "_applicable", c.applicable);
        w.field("check_" + c.name + "_pass", c.pass);
        w.field("check_" + c.name + "_margin", c.margin);
        if (!c.note.empty()) w.field("check_" + c.name + "_note", c.note);
    }
    if (!rep.alpha_sweep.empty()) {
        Vec alphas, rhs, norms, margins;
        std::size_t skipped = 0;
        for (const auto& r : rep.alpha_sweep) {
            alphas.push_back(r.alpha);
            rhs.push_back(r.rhs);
            if (r.skipped) {
                ++skipped;
                continue;
            }
            norms.push_back(r.lp_norm_final);
            margins.push_back(r.margin);
        }
        w.field("alpha_sweep_alphas", alphas);
        w.field("alpha_sweep_rhs", rhs);
        w.field("alpha_sweep_lp_norms", norms);
        w.field("alpha_sweep_margins", margins);
        w.field("alpha_sweep_skipped", skipped);
    }
    w.field("all_checks_pass", rep.all_checks_pass());
    return w.str();
}

inline std::string huber_table_csv(const std::vector<HuberRow>& rows) {
    std::ostringstream os;
    os << "t,g_sinh,huber\n";
    for (const auto& r : rows)
        os << fmt17(r.t) << "," << fmt17(r.g_sinh_value) << "," << fmt17(r.huber_value) << "\n";
    return os.str();
}

}  // namespace rgf
