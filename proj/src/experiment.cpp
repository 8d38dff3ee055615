// SPDX-License-Identifier: Apache-2.0
#include "smi/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <ostream>

#include <json.hpp>

#include "smi/asymptotic.hpp"
#include "smi/errors.hpp"
#include "smi/montecarlo.hpp"
#include "smi/precoder.hpp"

namespace smi {

const std::vector<std::string> kMetricColumns = {
    "param",        "smi_theory",       "smi_mc",       "smi_mc_stderr", "smi_upper",    "smi_lower",
    "elmmse_theory", "elmmse_mc",       "elmmse_mc_stderr", "elmmse_lower", "ebcrb_logdet", "ebcrb_trace",
};

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt12(double x) {
    if (std::isnan(x)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

Index as_count(double x, const char* what, Index minimum) {
    if (!(x >= static_cast<double>(minimum)) || x != std::floor(x) || x > 1e9) {
        throw ConfigError(std::string("grid entry ") + fmt17(x) + " is not a valid " + what);
    }
    return static_cast<Index>(x);
}

std::vector<double> grid_or(const ExperimentSpec& spec, double fallback) {
    return spec.grid.empty() ? std::vector<double>{fallback} : spec.grid;
}

void require_grid(const ExperimentSpec& spec) {
    if (spec.grid.empty()) {
        throw ConfigError(std::string("command '") + command_name(*spec.command) + "' needs a nonempty grid");
    }
}

PsdMatrix design_for(const ExperimentSpec& spec, const SceneConfig& sc) {
    const SensingProblem problem = SensingProblem::from_config(sc);
    switch (spec.precoder) {
        case PrecoderChoice::smi_optimal:
            return optimize_sensing(problem, spec.gp).final_phi;
        case PrecoderChoice::upper_bound_optimal:
            return optimize_sensing_upper_bound(problem, spec.gp).final_phi;
        case PrecoderChoice::isotropic:
            break;
    }
    return isotropic_covariance(sc.n_tx, sc.power_budget);
}

// One metric row: asymptotic values, bounds, and Monte-Carlo estimates that
// share one draw of S per trial for SMI and the LMMSE trace.
std::vector<double> metric_row(double param, const SceneConfig& sc, const PsdMatrix& phi, Index mc_trials,
                               unsigned threads) {
    sc.validate();
    const CorrelationPair pair = build_correlations(sc);
    const double ns = static_cast<double>(sc.n_frames);
    const MetricReport rep = asymptotic_report(phi, pair, sc.sigma2_s, ns, sc.n_targets);
    double smi_mc = kNaN, smi_se = kNaN, el_mc = kNaN, el_se = kNaN;
    if (mc_trials > 0) {
        const RealizationEvaluator eval(psd_sqrt(phi).mat(), pair, sc.sigma2_s);
        const VectorMetric metric = [&eval](const CMatrix& s) {
            const RealizationMetrics m = eval(s);
            return std::vector<double>{m.smi, m.lmmse_trace};
        };
        const std::vector<McEstimate> est = mc_estimate(metric, 2, sc, mc_trials, threads);
        smi_mc = est[0].mean;
        smi_se = est[0].stderr_;
        el_mc = est[1].mean;
        el_se = est[1].stderr_;
    }
    return {param,   rep.smi,    smi_mc,           smi_se,          rep.smi_upper, rep.smi_lower,
            rep.elmmse, el_mc,   el_se,            rep.elmmse_lower, rep.ebcrb_logdet, rep.ebcrb_trace};
}

SceneConfig with_targets(const ExperimentSpec& spec, Index k) {
    SceneConfig sc = spec.scene;
    if (spec.angle_range_deg) {
        sc.target_angles_tx = draw_angles(sc.seed, k, spec.angle_range_deg->first, spec.angle_range_deg->second);
        sc.target_angles_rx = sc.target_angles_tx;
    } else {
        if (k > sc.n_targets) {
            throw ConfigError("sweep-k: K = " + std::to_string(k) + " exceeds the " +
                              std::to_string(sc.n_targets) + " listed target angles");
        }
        sc.target_angles_tx.resize(static_cast<std::size_t>(k));
        sc.target_angles_rx.resize(static_cast<std::size_t>(k));
    }
    if (!sc.target_gains.empty()) {
        if (k > static_cast<Index>(sc.target_gains.size())) {
            throw ConfigError("sweep-k: K = " + std::to_string(k) + " exceeds the listed target gains");
        }
        sc.target_gains.resize(static_cast<std::size_t>(k));
    }
    sc.n_targets = k;
    return sc;
}

void add_summary(ResultTable& t, const std::string& k, double v) { t.summary.emplace_back(k, fmt17(v)); }
void add_summary(ResultTable& t, const std::string& k, const std::string& v) { t.summary.emplace_back(k, v); }

void summarize_agreement(ResultTable& t) {
    double smi_gap = 0.0;
    double el_gap = 0.0;
    for (const auto& r : t.rows) {
        if (std::isnan(r[2])) return;
        smi_gap = std::max(smi_gap, std::abs(r[1] - r[2]) / std::abs(r[2]));
        el_gap = std::max(el_gap, std::abs(r[6] - r[7]) / std::abs(r[7]));
    }
    add_summary(t, "max_relative_gap_smi", smi_gap);
    add_summary(t, "max_relative_gap_elmmse", el_gap);
}

ResultTable metric_sweep(const ExperimentSpec& spec) {
    ResultTable t{kMetricColumns, {}, {}};
    const Command cmd = *spec.command;
    if (cmd == Command::metrics) {
        const SceneConfig& sc = spec.scene;
        t.rows.push_back(metric_row(static_cast<double>(sc.n_frames), sc, design_for(spec, sc), spec.mc_trials,
                                    spec.threads));
        return t;
    }
    if (cmd == Command::validate || cmd == Command::sweep_ns) {
        if (cmd == Command::sweep_ns) require_grid(spec);
        for (double g : grid_or(spec, static_cast<double>(spec.scene.n_frames))) {
            SceneConfig sc = spec.scene;
            sc.n_frames = as_count(g, "frame count", 1);
            if (sc.n_frames < sc.n_tx) {
                throw ConfigError("grid entry N_S = " + std::to_string(sc.n_frames) + " violates N_S >= N_T");
            }
            t.rows.push_back(metric_row(g, sc, design_for(spec, sc), spec.mc_trials, spec.threads));
        }
        if (cmd == Command::validate) summarize_agreement(t);
        return t;
    }
    if (cmd == Command::sweep_k) {
        require_grid(spec);
        for (double g : spec.grid) {
            const SceneConfig sc = with_targets(spec, as_count(g, "target count", 0));
            t.rows.push_back(metric_row(g, sc, design_for(spec, sc), spec.mc_trials, spec.threads));
        }
        return t;
    }
    // sweep-power: grid in dBm; σ_s² stays at its configured value.
    require_grid(spec);
    for (double g : spec.grid) {
        SceneConfig sc = spec.scene;
        sc.power_budget = dbm_to_watts(g);
        t.rows.push_back(metric_row(g, sc, design_for(spec, sc), spec.mc_trials, spec.threads));
    }
    return t;
}

ResultTable dof_table(const ExperimentSpec& spec) {
    ResultTable t{{"param", "dof_last", "dof_limit", "dof_lower_bound", "dof_upper_bound", "smi_ratio_last"}, {}, {}};
    for (double g : grid_or(spec, static_cast<double>(spec.scene.n_frames))) {
        SceneConfig sc = spec.scene;
        sc.n_frames = as_count(g, "frame count", 1);
        sc.validate();
        const CorrelationPair pair = build_correlations(sc);
        const PsdMatrix phi = design_for(spec, sc);
        const double ns = static_cast<double>(sc.n_frames);
        double mean_gain = 1.0;
        if (!sc.target_gains.empty()) {
            mean_gain = 0.0;
            for (double x : sc.target_gains) mean_gain += x;
            mean_gain /= static_cast<double>(sc.target_gains.size());
        }
        std::vector<double> ladder;
        for (double db : spec.dof_snr_db) ladder.push_back(sc.power_budget * mean_gain / std::pow(10.0, db / 10.0));
        const auto [last, limit] = sensing_dof(phi, pair, ns, ladder);
        const Index rank = numerical_rank(hermitian_eig(phi).values);
        const double loss = static_cast<double>(std::min(sc.n_targets, rank));
        t.rows.push_back({g, last, limit, ns - loss, ns, last / ns});
    }
    return t;
}

void trajectory_summary(ResultTable& t, const OptTrajectory& traj) {
    add_summary(t, "initial_smi", traj.iterates.front().objective);
    add_summary(t, "final_smi", traj.iterates.back().objective);
    add_summary(t, "iterations", static_cast<double>(traj.iterates.back().iteration));
    add_summary(t, "converged", traj.converged ? "true" : "false");
    add_summary(t, "stop_reason", traj.stop_reason);
    add_summary(t, "final_trace", traj.final_phi.mat().trace().real());
}

ResultTable optimize_sensing_table(const ExperimentSpec& spec) {
    const SensingProblem problem = SensingProblem::from_config(spec.scene);
    const OptTrajectory traj = optimize_sensing(problem, spec.gp);
    ResultTable t{{"iteration", "smi", "feasibility", "step"}, {}, {}};
    for (const TrajectoryPoint& p : traj.iterates) {
        t.rows.push_back({static_cast<double>(p.iteration), p.objective, p.feasibility, p.step});
    }
    trajectory_summary(t, traj);
    add_summary(t, "isotropic_smi",
                smi_asymptotic(isotropic_covariance(spec.scene.n_tx, problem.power), problem.pair, problem.sigma2_s,
                               problem.n_frames));
    return t;
}

ResultTable optimize_isac_table(const ExperimentSpec& spec) {
    const SensingProblem problem = SensingProblem::from_config(spec.scene);
    const CommChannel comm = make_comm_channel(spec.scene);
    const OptTrajectory traj = optimize_isac(problem, comm, spec.scene.sigma2_c, spec.admm);
    ResultTable t{{"iteration", "smi", "primal_residual", "dual_residual", "rate_multiplier"}, {}, {}};
    for (const TrajectoryPoint& p : traj.iterates) {
        t.rows.push_back({static_cast<double>(p.iteration), p.objective, p.feasibility, p.dual_residual, p.step});
    }
    trajectory_summary(t, traj);
    add_summary(t, "rate_floor_nats", spec.admm.rate_floor);
    add_summary(t, "final_comm_mi_nats", comm_mi(comm, traj.final_phi, spec.scene.sigma2_c));
    add_summary(t, "capacity_nats", water_filling(comm, problem.power, spec.scene.sigma2_c).capacity);
    return t;
}

ResultTable tradeoff_table(const ExperimentSpec& spec) {
    require_grid(spec);
    const SensingProblem problem = SensingProblem::from_config(spec.scene);
    const CommChannel comm = make_comm_channel(spec.scene);
    const double capacity = water_filling(comm, problem.power, spec.scene.sigma2_c).capacity;
    const double unit = spec.rate_unit == RateUnit::bits ? std::numbers::ln2 : 1.0;
    ResultTable t{kMetricColumns, {}, {}};
    for (const char* c : {"comm_mi", "admm_iterations", "admm_converged"}) t.columns.emplace_back(c);
    for (double g : spec.grid) {
        const double floor = spec.rate_grid_relative ? g * capacity : g * unit;
        AdmmSettings settings = spec.admm;
        settings.rate_floor = floor;
        const OptTrajectory traj = optimize_isac(problem, comm, spec.scene.sigma2_c, settings);
        std::vector<double> row = metric_row(floor, spec.scene, traj.final_phi, spec.mc_trials, spec.threads);
        row.push_back(comm_mi(comm, traj.final_phi, spec.scene.sigma2_c));
        row.push_back(static_cast<double>(traj.iterates.back().iteration));
        row.push_back(traj.converged ? 1.0 : 0.0);
        t.rows.push_back(std::move(row));
    }
    add_summary(t, "capacity_nats", capacity);
    return t;
}

}  // namespace

ResultTable execute(const ExperimentSpec& spec) {
    if (!spec.command) throw ConfigError("no command given");
    switch (*spec.command) {
        case Command::metrics:
        case Command::validate:
        case Command::sweep_ns:
        case Command::sweep_k:
        case Command::sweep_power:
            return metric_sweep(spec);
        case Command::dof:
            return dof_table(spec);
        case Command::optimize_sensing:
            return optimize_sensing_table(spec);
        case Command::optimize_isac:
            return optimize_isac_table(spec);
        case Command::tradeoff:
            return tradeoff_table(spec);
    }
    throw ConfigError("unknown command");
}

std::string to_csv(const ResultTable& table) {
    std::string out;
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        if (i) out += ',';
        out += table.columns[i];
    }
    out += '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += fmt12(row[i]);
        }
        out += '\n';
    }
    return out;
}

namespace {

nlohmann::ordered_json number12(double x) {
    if (std::isnan(x)) return nullptr;
    // Round through the CSV representation so both formats carry the same values.
    return std::stod(fmt12(x));
}

}  // namespace

std::string to_json(const ResultTable& table) {
    nlohmann::ordered_json doc;
    doc["columns"] = table.columns;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : table.rows) {
        nlohmann::ordered_json r = nlohmann::ordered_json::object();
        for (std::size_t i = 0; i < row.size(); ++i) r[table.columns[i]] = number12(row[i]);
        rows.push_back(std::move(r));
    }
    doc["rows"] = std::move(rows);
    nlohmann::ordered_json summary = nlohmann::ordered_json::object();
    for (const auto& [k, v] : table.summary) summary[k] = v;
    doc["summary"] = std::move(summary);
    return doc.dump(2) + "\n";
}

std::string manifest_json(const ExperimentSpec& spec, const ResultTable& table) {
    nlohmann::ordered_json doc;
    doc["tool"] = "smi_experiment";
    doc["command"] = spec.command ? command_name(*spec.command) : "";
    doc["seed"] = spec.scene.seed;
    doc["output"] = spec.output_path;
    nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
    for (const auto& [k, v] : spec.resolved()) cfg[k] = v;
    doc["config"] = std::move(cfg);
    doc["columns"] = table.columns;
    doc["rows"] = table.rows.size();
    nlohmann::ordered_json summary = nlohmann::ordered_json::object();
    for (const auto& [k, v] : table.summary) summary[k] = v;
    doc["summary"] = std::move(summary);
    return doc.dump(2) + "\n";
}

int run(const ExperimentSpec& spec, std::ostream& out, std::ostream& err) {
    try {
        const ResultTable table = execute(spec);
        const std::string body = spec.format == OutputFormat::csv ? to_csv(table) : to_json(table);
        if (spec.output_path.empty()) {
            out << body;
        } else {
            std::ofstream f(spec.output_path, std::ios::binary);
            if (!f) throw ConfigError("cannot open output file '" + spec.output_path + "'");
            f << body;
            std::ofstream m(spec.output_path + ".manifest.json", std::ios::binary);
            if (!m) throw ConfigError("cannot open manifest file '" + spec.output_path + ".manifest.json'");
            m << manifest_json(spec, table);
        }
        for (const auto& [k, v] : table.summary) err << k << " = " << v << '\n';
        return kExitOk;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DomainError& e) {
        err << "invalid input: " << e.what() << '\n';
        return kExitConfig;
    } catch (const InfeasibleError& e) {
        err << "infeasible: " << e.what() << '\n';
        return kExitInfeasible;
    } catch (const Error& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
}

}  // namespace smi
