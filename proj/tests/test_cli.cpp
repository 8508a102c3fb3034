#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "rgf/config.hpp"
#include "rgf/figures.hpp"

using namespace rgf;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "rgf_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_config(const fs::path& dir, const std::string& name, const std::string& body) {
    const fs::path p = dir / name;
    std::ofstream out(p);
    out << body;
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

const char* kQuickConfig = R"({
  "matrix": [[0.9, -0.6]],
  "y": [0.63],
  "reparam": {"kind": "tanh"},
  "link": "identity",
  "loss": {"kind": "squared_l2"},
  "init": {"alpha": 0.0},
  "integrator": {"method": "adaptive_rk45", "t_max": 1e6, "loss_tol": 1e-16},
  "outputs": {"trajectory_csv": "traj.csv", "report_json": "report.json"}
})";

}  // namespace

TEST_CASE("bundled configs parse") {
    for (const auto& entry : fs::directory_iterator("configs")) {
        if (entry.path().extension() != ".json") continue;
        CHECK_NOTHROW(RunConfig::parse_file(entry.path()));
    }
}

TEST_CASE("config validation diagnostics") {
    const auto dir = scratch_dir("config_validation");
    SECTION("unknown keys are rejected") {
        const auto p = write_config(dir, "bad.json", R"({
          "matrix": [[1.0, 1.0]], "y": [1.0],
          "reparam": {"kind": "identity"}, "link": "identity",
          "loss": {"kind": "squared_l2"}, "init": {"alpha": 0.0},
          "integrator": {"method": "adaptive_rk45", "t_max": 10.0},
          "outputs": {"trajectory_csv": "t.csv", "report_json": "r.json"},
          "extra_knob": 1
        })");
        CHECK_THROWS_WITH(RunConfig::parse_file(p),
                          Catch::Matchers::ContainsSubstring("unknown key \"extra_knob\""));
    }
    SECTION("power exponent out of range") {
        const auto p = write_config(dir, "badp.json", R"({
          "matrix": [[1.0, 1.0]], "y": [1.0],
          "reparam": {"kind": "power", "p": 2.5}, "link": "identity",
          "loss": {"kind": "squared_l2"}, "init": {"alpha": 0.1},
          "integrator": {"method": "adaptive_rk45", "t_max": 10.0},
          "outputs": {"trajectory_csv": "t.csv", "report_json": "r.json"}
        })");
        CHECK_THROWS_WITH(RunConfig::parse_file(p),
                          Catch::Matchers::ContainsSubstring("p outside (1,2)"));
        CHECK(run_config(p) == 1);
    }
    SECTION("malformed json carries a parse diagnostic") {
        const auto p = write_config(dir, "syntax.json", "{ not json");
        CHECK_THROWS_WITH(RunConfig::parse_file(p),
                          Catch::Matchers::ContainsSubstring("parse error"));
    }
    SECTION("init requires exactly one form") {
        const auto p = write_config(dir, "init2.json", R"({
          "matrix": [[1.0, 1.0]], "y": [1.0],
          "reparam": {"kind": "identity"}, "link": "identity",
          "loss": {"kind": "squared_l2"}, "init": {"alpha": 0.0, "w0": [0.0, 0.0]},
          "integrator": {"method": "adaptive_rk45", "t_max": 10.0},
          "outputs": {"trajectory_csv": "t.csv", "report_json": "r.json"}
        })");
        CHECK_THROWS_AS(RunConfig::parse_file(p), config_error);
    }
}

TEST_CASE("matrix can be loaded from a csv file") {
    const auto dir = scratch_dir("matrix_csv");
    {
        std::ofstream out(dir / "a.csv");
        out << "0.9,-0.6\n";
    }
    const auto p = write_config(dir, "cfg.json", R"({
      "matrix": {"csv": "a.csv"}, "y": [0.63],
      "reparam": {"kind": "tanh"}, "link": "identity",
      "loss": {"kind": "squared_l2"}, "init": {"alpha": 0.0},
      "integrator": {"method": "adaptive_rk45", "t_max": 10.0},
      "outputs": {"trajectory_csv": "t.csv", "report_json": "r.json"}
    })");
    const RunConfig cfg = RunConfig::parse_file(p);
    CHECK(cfg.instance.a.rows == 1);
    CHECK(cfg.instance.a(0, 1) == -0.6);
}

TEST_CASE("run_config writes outputs and is byte-reproducible") {
    const auto dir = scratch_dir("run_config");
    const auto cfg_path = write_config(dir, "quick.json", kQuickConfig);

    const auto out1 = dir / "out1";
    const auto out2 = dir / "out2";
    for (const auto& out : {out1, out2}) {
        fs::create_directories(out);
        ::setenv("RGF_OUTPUT_DIR", out.c_str(), 1);
        std::ostringstream sink;
        CHECK(run_config(cfg_path, sink) == 0);
        ::unsetenv("RGF_OUTPUT_DIR");
        CHECK(fs::exists(out / "traj.csv"));
        CHECK(fs::exists(out / "report.json"));
    }
    CHECK(slurp(out1 / "traj.csv") == slurp(out2 / "traj.csv"));
    CHECK(slurp(out1 / "report.json") == slurp(out2 / "report.json"));
}

TEST_CASE("tanh instance without an interior solution exits with a solver error") {
    const auto dir = scratch_dir("tanh_infeasible");
    const auto cfg_path = write_config(dir, "inf.json", R"({
      "matrix": [[1.0, 1.0]], "y": [3.0],
      "reparam": {"kind": "tanh"}, "link": "identity",
      "loss": {"kind": "squared_l2"}, "init": {"alpha": 0.0},
      "integrator": {"method": "adaptive_rk45", "t_max": 50.0, "loss_tol": 1e-12},
      "oracle": {"max_iter": 60},
      "outputs": {"trajectory_csv": "t.csv", "report_json": "r.json"}
    })");
    ::setenv("RGF_OUTPUT_DIR", dir.c_str(), 1);
    std::ostringstream sink;
    const int code = run_config(cfg_path, sink);
    ::unsetenv("RGF_OUTPUT_DIR");
    CHECK(code == 1);
    CHECK(sink.str().find("(-1,1)") != std::string::npos);
    // the error is propagated into the report file
    CHECK(slurp(dir / "r.json").find("error") != std::string::npos);
}

TEST_CASE("trajectory csv round trip recovers samples exactly") {
    const ProblemInstance inst = fig1b_instance();
    FlowConfig cfg = fig_flow_config();
    cfg.t_max = 0.5;
    const Trajectory traj = integrate(inst, cfg);
    const Vec ref{1.0, -1.0};
    const std::string csv = trajectory_csv(traj, inst.reparam, &ref);
    const auto rows = parse_trajectory_csv(csv);
    REQUIRE(rows.size() == traj.samples.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        CHECK(rows[k].t == traj.samples[k].t);
        for (std::size_t i = 0; i < 2; ++i) {
            CHECK(rows[k].w[i] == traj.samples[k].w[i]);
            CHECK(rows[k].w_tilde[i] == traj.samples[k].w_tilde[i]);
        }
        CHECK(rows[k].loss == traj.samples[k].loss);
        CHECK(rows[k].min_abs_rho_prime == traj.samples[k].min_abs_rho_prime);
        CHECK(rows[k].bregman_to_ref ==
              bregman_divergence(inst.reparam, ref, traj.samples[k].w_tilde));
    }
}

TEST_CASE("report json round trips doubles at full precision") {
    const auto run = run_bias_agreement_full(fig1b_instance(), fig_flow_config());
    const std::string text = report_json(run.report);
    const auto j = nlohmann::json::parse(text);
    CHECK(j.at("flow_final_loss").get<double>() == run.report.flow_final_loss);
    CHECK(j.at("agreement_linf").get<double>() == run.report.agreement_linf);
    const auto zt = j.at("w_tilde_final").get<std::vector<double>>();
    REQUIRE(zt.size() == run.report.w_tilde_final.size());
    for (std::size_t i = 0; i < zt.size(); ++i) CHECK(zt[i] == run.report.w_tilde_final[i]);
}

TEST_CASE("figure emission") {
    const auto dir = scratch_dir("emit");
    SECTION("fig2 grid endpoints") {
        emit_figure_data("fig2", dir);
        std::ifstream in(dir / "fig2_huber_comparison.csv");
        std::string line;
        std::getline(in, line);
        CHECK(line == "t,g_sinh,huber");
        std::vector<std::string> lines;
        while (std::getline(in, line))
            if (!line.empty()) lines.push_back(line);
        REQUIRE(lines.size() == 601);
        CHECK(lines.front().rfind("-6,", 0) == 0);
        CHECK(lines.back().rfind("6,", 0) == 0);
    }
    SECTION("fig1b terminal row is converged and near the lp minimizer") {
        emit_figure_data("fig1b", dir);
        const auto rows = parse_trajectory_csv(slurp(dir / "fig1b_trajectory.csv"));
        REQUIRE(!rows.empty());
        CHECK(rows.back().loss <= 1e-10);
        const auto lps = lp_min(Mat(1, 2, {-0.7, -1.0}), {2.0}, 1.8);
        CHECK(norm_inf(rows.back().w_tilde - lps.z_star) <= 1e-3);
    }
    SECTION("unknown figure kind") {
        CHECK_THROWS_AS(emit_figure_data("fig9", dir), std::invalid_argument);
    }
}
