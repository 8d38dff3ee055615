// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <sstream>

#include "smi/config.hpp"
#include "smi/errors.hpp"
#include "smi/experiment.hpp"

using namespace smi;

namespace {

std::string error_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

bool contains(const std::string& s, const std::string& needle) { return s.find(needle) != std::string::npos; }

std::size_t column(const ResultTable& t, const std::string& name) {
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
        if (t.columns[i] == name) return i;
    }
    FAIL("missing column " << name);
    return 0;
}

const char* kSmall = R"(
command = validate
n_tx = 6
n_rx = 6
n_targets = 3
grid = 6, 9, 12
mc_trials = 300
)";

}  // namespace

TEST_CASE("minimal config takes the documented defaults") {
    const ExperimentSpec s = parse_config("n_targets = 3\n");
    CHECK(s.mc_trials == 5000);
    CHECK(s.scene.antenna_spacing == 0.5);
    CHECK(s.scene.n_tx == 16);
    CHECK(s.scene.n_rx == 16);
    CHECK(s.scene.n_frames == 16);
    CHECK(s.scene.power_budget == doctest::Approx(1.0));
    CHECK(s.format == OutputFormat::csv);
    CHECK(s.precoder == PrecoderChoice::isotropic);
    CHECK_FALSE(s.command.has_value());
    REQUIRE(s.scene.target_angles_tx.size() == 3);
    for (double a : s.scene.target_angles_tx) {
        CHECK(a >= 30.0 * std::numbers::pi / 180.0);
        CHECK(a <= 60.0 * std::numbers::pi / 180.0);
    }
    CHECK(s.scene.target_angles_rx == s.scene.target_angles_tx);
    // Sensing SNR 10 dB at unit gains: σ_s² = P / 10.
    CHECK(s.scene.sigma2_s == doctest::Approx(0.1));
}

TEST_CASE("comments, blank lines and whitespace") {
    const ExperimentSpec s = parse_config("# header\n\n  n_tx = 4   # trailing\nn_frames=4\nn_targets = 1\n");
    CHECK(s.scene.n_tx == 4);
    CHECK(s.scene.n_frames == 4);
}

TEST_CASE("N_S >= N_T is enforced") {
    const std::string e = error_of("n_tx = 8\nn_frames = 4\nn_targets = 2\n");
    CHECK(contains(e, "N_S >= N_T"));
    CHECK(contains(e, "line 2"));
    CHECK(contains(e, "n_frames"));
    const std::string g = error_of("command = sweep-ns\nn_tx = 8\nn_targets = 2\ngrid = 8, 4\n");
    CHECK(g.empty());
    CHECK_THROWS_AS(execute(parse_config("command = sweep-ns\nn_tx = 8\nn_targets = 2\ngrid = 8, 4\nmc_trials = 0\n")),
                    ConfigError);
}

TEST_CASE("malformed, unknown and duplicate entries name the line and key") {
    std::string e = error_of("n_tx = 4\nn_targets = 2\npower_dbm = 3x0\n");
    CHECK(contains(e, "line 3"));
    CHECK(contains(e, "power_dbm"));
    e = error_of("n_targets = 2\nbogus = 1\n");
    CHECK(contains(e, "line 2"));
    CHECK(contains(e, "bogus"));
    e = error_of("n_targets = 2\nn_targets = 3\n");
    CHECK(contains(e, "line 2"));
    CHECK(contains(e, "duplicate"));
    CHECK(contains(error_of("n_targets = 2\njust text\n"), "line 2"));
    CHECK(contains(error_of("n_targets = two\n"), "n_targets"));
    CHECK(contains(error_of("n_targets = 2\ncommand = plot\n"), "command"));
    CHECK(contains(error_of("n_targets = 2\ngrid = 1, , 3\n"), "grid"));
    CHECK(contains(error_of("n_targets = 2\nmc_trials = 1\n"), "mc_trials"));
    CHECK(contains(error_of("n_targets = 2\npower_dbm = 30\npower_w = 1\n"), "power_w"));
    CHECK(contains(error_of("n_targets = 2\ntarget_gains = 1\n"), "target_gains"));
}

TEST_CASE("unit conversions") {
    CHECK(dbm_to_watts(30.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(dbm_to_watts(-90.0) == doctest::Approx(1e-12).epsilon(1e-12));
    CHECK(dbm_to_watts(36.0) == doctest::Approx(std::pow(10.0, 0.6)).epsilon(1e-15));
    const ExperimentSpec s =
        parse_config("n_targets = 2\npower_dbm = 36\nsigma2_c_dbm = -90\nsigma2_s_dbm = 0\nrate_unit = bits\nrate_floor = 20\n");
    CHECK(s.scene.power_budget == doctest::Approx(std::pow(10.0, 0.6)));
    CHECK(s.scene.sigma2_c == doctest::Approx(1e-12));
    CHECK(s.scene.sigma2_s == doctest::Approx(1e-3));
    CHECK(s.admm.rate_floor == doctest::Approx(20.0 * std::numbers::ln2));
    const ExperimentSpec n = parse_config("n_targets = 2\nrate_floor = 5\n");
    CHECK(n.admm.rate_floor == 5.0);
}

TEST_CASE("listed angles and seeded draws") {
    const ExperimentSpec a = parse_config("n_targets = 2\ntarget_angles_deg = 10, -20\ntarget_angles_rx_deg = 5, 6\n");
    CHECK(a.scene.target_angles_tx[0] == doctest::Approx(10.0 * std::numbers::pi / 180.0));
    CHECK(a.scene.target_angles_rx[1] == doctest::Approx(6.0 * std::numbers::pi / 180.0));
    const ExperimentSpec b = parse_config("n_targets = 4\nseed = 7\n");
    const ExperimentSpec c = parse_config("n_targets = 4\nseed = 8\n");
    CHECK(b.scene.target_angles_tx != c.scene.target_angles_tx);
    ExperimentSpec d = c;
    apply_seed(d, 7);
    CHECK(d.scene.target_angles_tx == b.scene.target_angles_tx);
    // Fewer targets draw a prefix of the same sequence.
    const ExperimentSpec e = parse_config("n_targets = 2\nseed = 7\n");
    CHECK(e.scene.target_angles_tx[1] == b.scene.target_angles_tx[1]);
}

TEST_CASE("validate: schema, accuracy gate, byte-identical across workers") {
    ExperimentSpec s = parse_config(kSmall);
    const ResultTable t1 = execute(s);
    CHECK(std::vector<std::string>(t1.columns.begin(), t1.columns.begin() + 12) == kMetricColumns);
    CHECK(kMetricColumns.front() == "param");
    CHECK(kMetricColumns.back() == "ebcrb_trace");
    REQUIRE(t1.rows.size() == 3);
    for (const auto& r : t1.rows) {
        CHECK(std::abs(r[column(t1, "smi_theory")] - r[column(t1, "smi_mc")]) / r[column(t1, "smi_mc")] < 0.05);
        CHECK(r[column(t1, "smi_mc_stderr")] > 0.0);
        CHECK(r[column(t1, "smi_lower")] <= r[column(t1, "smi_theory")]);
        CHECK(r[column(t1, "smi_theory")] <= r[column(t1, "smi_upper")]);
    }
    const std::string csv1 = to_csv(t1);
    CHECK(csv1.rfind("param,smi_theory,smi_mc,smi_mc_stderr,smi_upper,smi_lower,elmmse_theory,elmmse_mc,"
                     "elmmse_mc_stderr,elmmse_lower,ebcrb_logdet,ebcrb_trace",
                     0) == 0);
    for (unsigned th : {4u, 8u}) {
        s.threads = th;
        CHECK(to_csv(execute(s)) == csv1);
    }
    ExperimentSpec other = parse_config(kSmall);
    apply_seed(other, 99);
    CHECK(to_csv(execute(other)) != csv1);
}

TEST_CASE("mc_trials = 0 skips the Monte-Carlo columns") {
    ExperimentSpec s = parse_config(kSmall);
    s.mc_trials = 0;
    const ResultTable t = execute(s);
    CHECK(std::isnan(t.rows[0][column(t, "smi_mc")]));
    CHECK(contains(to_csv(t), "nan"));
    CHECK(contains(to_json(t), "null"));
}

TEST_CASE("sweep-power: SMI increases and ELMMSE decreases with power") {
    const ExperimentSpec s = parse_config(
        "command = sweep-power\nn_tx = 8\nn_rx = 8\nn_frames = 8\nn_targets = 4\ngrid = 30, 36\nmc_trials = 200\n");
    const ResultTable t = execute(s);
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[1][column(t, "smi_theory")] > t.rows[0][column(t, "smi_theory")]);
    CHECK(t.rows[1][column(t, "elmmse_theory")] < t.rows[0][column(t, "elmmse_theory")]);
    CHECK(t.rows[1][column(t, "smi_mc")] > t.rows[0][column(t, "smi_mc")]);
}

TEST_CASE("sweep-ns, sweep-k, dof, metrics") {
    ResultTable t = execute(parse_config("command = sweep-ns\nn_tx = 4\nn_rx = 4\nn_targets = 2\ngrid = 4, 8, 16\nmc_trials = 0\n"));
    CHECK(t.rows[0][column(t, "smi_theory")] < t.rows[2][column(t, "smi_theory")]);
    t = execute(parse_config("command = sweep-k\nn_tx = 6\nn_rx = 6\nn_frames = 6\nn_targets = 4\ngrid = 1, 2, 4\nmc_trials = 0\n"));
    CHECK(t.rows.size() == 3);
    CHECK_THROWS_AS(
        execute(parse_config("command = sweep-k\nn_tx = 4\nn_targets = 2\ntarget_angles_deg = 10, 20\ngrid = 3\n")),
        ConfigError);
    t = execute(parse_config("command = dof\nn_tx = 4\nn_rx = 4\nn_targets = 2\ngrid = 8, 64\n"));
    for (const auto& r : t.rows) {
        CHECK(r[column(t, "dof_last")] >= r[column(t, "dof_lower_bound")] - 0.05 * r[0]);
        CHECK(r[column(t, "dof_last")] <= r[column(t, "dof_upper_bound")] + 0.05 * r[0]);
    }
    CHECK(t.rows[1][column(t, "smi_ratio_last")] > t.rows[0][column(t, "smi_ratio_last")]);
    t = execute(parse_config("command = metrics\nn_tx = 4\nn_targets = 2\nmc_trials = 50\n"));
    CHECK(t.rows.size() == 1);
    CHECK_THROWS_AS(execute(parse_config("command = sweep-ns\nn_targets = 2\n")), ConfigError);
}

TEST_CASE("optimizer commands") {
    ResultTable t = execute(parse_config("command = optimize-sensing\nn_tx = 6\nn_rx = 6\nn_targets = 2\n"));
    const std::size_t c = column(t, "smi");
    for (std::size_t i = 1; i < t.rows.size(); ++i) CHECK(t.rows[i][c] >= t.rows[i - 1][c]);

    t = execute(parse_config("command = tradeoff\nn_tx = 6\nn_rx = 6\nn_frames = 6\nn_targets = 4\nn_comm = 2\n"
                             "rate_grid_relative = true\ngrid = 0, 0.5, 0.9\nmc_trials = 0\n"));
    const std::size_t sc = column(t, "smi_theory"), rc = column(t, "comm_mi");
    for (std::size_t i = 1; i < t.rows.size(); ++i) CHECK(t.rows[i][sc] <= t.rows[i - 1][sc] * (1 + 1e-9));
    for (const auto& r : t.rows) CHECK(r[rc] >= r[0] - 1e-6);  // param is the absolute floor in nats

    t = execute(parse_config("command = optimize-isac\nn_tx = 6\nn_rx = 6\nn_frames = 6\nn_targets = 4\nn_comm = 2\n"
                             "rate_floor = 1\n"));
    CHECK(t.columns == std::vector<std::string>{"iteration", "smi", "primal_residual", "dual_residual", "rate_multiplier"});
}

TEST_CASE("run: outputs, manifest, exit codes") {
    const std::string path = "test_config_out.csv";
    ExperimentSpec s = parse_config(std::string(kSmall) + "output = " + path + "\nseed = 5\n");
    std::ostringstream out, err;
    REQUIRE(run(s, out, err) == kExitOk);
    std::ifstream f(path);
    std::stringstream body;
    body << f.rdbuf();
    CHECK(body.str() == to_csv(execute(s)));
    std::ifstream m(path + ".manifest.json");
    const nlohmann::json man = nlohmann::json::parse(m);
    CHECK(man["command"] == "validate");
    CHECK(man["seed"] == 5);
    CHECK(man["config"]["n_tx"] == "6");
    CHECK(man["columns"].size() == 12);
    CHECK(man.contains("summary"));

    s.output_path.clear();
    s.format = OutputFormat::json;
    std::ostringstream jout;
    REQUIRE(run(s, jout, err) == kExitOk);
    const nlohmann::json j = nlohmann::json::parse(jout.str());
    CHECK(j["rows"].size() == 3);

    ExperimentSpec bad = parse_config("command = sweep-ns\nn_targets = 2\n");
    CHECK(run(bad, out, err) == kExitConfig);
    ExperimentSpec inf = parse_config("command = optimize-isac\nn_tx = 4\nn_targets = 2\nn_comm = 2\nrate_floor = 1000\n");
    CHECK(run(inf, out, err) == kExitInfeasible);
    ExperimentSpec none = parse_config("n_targets = 2\n");
    CHECK(run(none, out, err) == kExitConfig);
}
