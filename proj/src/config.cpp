// SPDX-License-Identifier: Apache-2.0
#include "smi/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

#include "smi/errors.hpp"
#include "smi/rng.hpp"

namespace smi {

namespace {

struct Entry {
    std::string value;
    int line;
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void fail_at(int line, const std::string& key, const std::string& msg) {
    throw ConfigError("line " + std::to_string(line) + ": key '" + key + "': " + msg);
}

std::string fmt_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string fmt_list(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += fmt_double(v[i]);
    }
    return out;
}

class Document {
  public:
    explicit Document(const std::string& text) {
        std::istringstream in(text);
        std::string raw;
        int line = 0;
        while (std::getline(in, raw)) {
            ++line;
            const auto hash = raw.find('#');
            if (hash != std::string::npos) raw.erase(hash);
            const std::string s = trim(raw);
            if (s.empty()) continue;
            const auto eq = s.find('=');
            if (eq == std::string::npos) {
                throw ConfigError("line " + std::to_string(line) + ": expected 'key = value'");
            }
            const std::string key = trim(s.substr(0, eq));
            const std::string value = trim(s.substr(eq + 1));
            if (key.empty()) throw ConfigError("line " + std::to_string(line) + ": empty key");
            if (value.empty()) fail_at(line, key, "empty value");
            const auto [it, inserted] = entries_.emplace(key, Entry{value, line});
            if (!inserted) {
                fail_at(line, key, "duplicate key (first set on line " + std::to_string(it->second.line) + ")");
            }
        }
    }

    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    int line(const std::string& key) const {
        const auto it = entries_.find(key);
        return it == entries_.end() ? 0 : it->second.line;
    }

    std::optional<std::string> str(const std::string& key) {
        const auto it = entries_.find(key);
        if (it == entries_.end()) return std::nullopt;
        consumed_.insert({key, true});
        return it->second.value;
    }

    std::optional<double> real(const std::string& key) {
        const auto v = str(key);
        if (!v) return std::nullopt;
        return parse_real(*v, key);
    }

    std::optional<long long> integer(const std::string& key) {
        const auto v = str(key);
        if (!v) return std::nullopt;
        long long out = 0;
        const char* b = v->data();
        const char* e = b + v->size();
        const auto r = std::from_chars(b, e, out);
        if (r.ec != std::errc() || r.ptr != e) fail_at(line(key), key, "expected an integer, got '" + *v + "'");
        return out;
    }

    std::optional<std::uint64_t> unsigned64(const std::string& key) {
        const auto v = str(key);
        if (!v) return std::nullopt;
        std::uint64_t out = 0;
        const char* b = v->data();
        const char* e = b + v->size();
        const auto r = std::from_chars(b, e, out);
        if (r.ec != std::errc() || r.ptr != e) {
            fail_at(line(key), key, "expected an unsigned 64-bit integer, got '" + *v + "'");
        }
        return out;
    }

    std::optional<std::vector<double>> list(const std::string& key) {
        const auto v = str(key);
        if (!v) return std::nullopt;
        std::vector<double> out;
        std::string item;
        std::istringstream in(*v);
        while (std::getline(in, item, ',')) {
            item = trim(item);
            if (item.empty()) fail_at(line(key), key, "empty list entry");
            out.push_back(parse_real(item, key));
        }
        return out;
    }

    std::optional<bool> boolean(const std::string& key) {
        const auto v = str(key);
        if (!v) return std::nullopt;
        if (*v == "true" || *v == "1" || *v == "yes") return true;
        if (*v == "false" || *v == "0" || *v == "no") return false;
        fail_at(line(key), key, "expected true or false, got '" + *v + "'");
    }

    void reject_unknown() const {
        // Report the earliest offending line.
        const Entry* first = nullptr;
        std::string first_key;
        for (const auto& [k, e] : entries_) {
            if (consumed_.count(k)) continue;
            if (!first || e.line < first->line) {
                first = &e;
                first_key = k;
            }
        }
        if (first) fail_at(first->line, first_key, "unknown key");
    }

  private:
    double parse_real(const std::string& s, const std::string& key) const {
        double out = 0.0;
        const char* b = s.data();
        const char* e = b + s.size();
        if (b != e && *b == '+') ++b;
        const auto r = std::from_chars(b, e, out);
        if (r.ec != std::errc() || r.ptr != e || !std::isfinite(out)) {
            fail_at(line(key), key, "expected a finite number, got '" + s + "'");
        }
        return out;
    }

    std::map<std::string, Entry> entries_;
    std::map<std::string, bool> consumed_;
};

Index count_at_least(Document& doc, const std::string& key, Index fallback, Index minimum) {
    const auto v = doc.integer(key);
    if (!v) return fallback;
    if (*v < minimum) fail_at(doc.line(key), key, "must be >= " + std::to_string(minimum));
    return static_cast<Index>(*v);
}

double positive(Document& doc, const std::string& key, double value) {
    if (!(value > 0.0)) fail_at(doc.line(key), key, "must be > 0");
    return value;
}

template <class T>
T one_of(Document& doc, const std::string& key, T fallback,
         const std::vector<std::pair<const char*, T>>& options) {
    const auto v = doc.str(key);
    if (!v) return fallback;
    std::string allowed;
    for (const auto& [name, value] : options) {
        if (*v == name) return value;
        allowed += allowed.empty() ? name : std::string(", ") + name;
    }
    fail_at(doc.line(key), key, "expected one of {" + allowed + "}, got '" + *v + "'");
}

const std::vector<std::pair<const char*, Command>> kCommands = {
    {"metrics", Command::metrics},
    {"validate", Command::validate},
    {"sweep-ns", Command::sweep_ns},
    {"sweep-k", Command::sweep_k},
    {"sweep-power", Command::sweep_power},
    {"dof", Command::dof},
    {"optimize-sensing", Command::optimize_sensing},
    {"optimize-isac", Command::optimize_isac},
    {"tradeoff", Command::tradeoff},
};

double radians(double deg) { return deg * std::numbers::pi / 180.0; }
double degrees(double rad) { return rad * 180.0 / std::numbers::pi; }

}  // namespace

const char* command_name(Command c) {
    for (const auto& [name, value] : kCommands) {
        if (value == c) return name;
    }
    return "?";
}

std::optional<Command> parse_command(const std::string& name) {
    for (const auto& [n, value] : kCommands) {
        if (name == n) return value;
    }
    return std::nullopt;
}

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

std::vector<double> draw_angles(std::uint64_t seed, Index count, double lo_deg, double hi_deg) {
    RngStream stream(seed, Stream::angles);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(count));
    for (Index k = 0; k < count; ++k) out.push_back(radians(stream.uniform(lo_deg, hi_deg)));
    return out;
}

void apply_seed(ExperimentSpec& spec, std::uint64_t seed) {
    spec.scene.seed = seed;
    if (spec.angle_range_deg) {
        spec.scene.target_angles_tx =
            draw_angles(seed, spec.scene.n_targets, spec.angle_range_deg->first, spec.angle_range_deg->second);
        spec.scene.target_angles_rx = spec.scene.target_angles_tx;
    }
}

ExperimentSpec parse_config(const std::string& text) {
    Document doc(text);
    ExperimentSpec spec;
    SceneConfig& sc = spec.scene;

    if (const auto c = doc.str("command")) {
        spec.command = parse_command(*c);
        if (!spec.command) fail_at(doc.line("command"), "command", "unknown command '" + *c + "'");
    }

    sc.n_tx = count_at_least(doc, "n_tx", sc.n_tx, 1);
    sc.n_rx = count_at_least(doc, "n_rx", sc.n_rx, 1);
    sc.n_comm = count_at_least(doc, "n_comm", sc.n_comm, 1);
    sc.n_frames = count_at_least(doc, "n_frames", sc.n_frames, 1);
    sc.n_targets = count_at_least(doc, "n_targets", sc.n_targets, 0);
    if (sc.n_frames < sc.n_tx) {
        const std::string key = doc.has("n_frames") ? "n_frames" : "n_tx";
        fail_at(doc.line(key), key,
                "n_frames = " + std::to_string(sc.n_frames) + " violates N_S >= N_T (n_tx = " +
                    std::to_string(sc.n_tx) + ")");
    }

    // Powers.
    if (doc.has("power_dbm") && doc.has("power_w")) {
        fail_at(doc.line("power_w"), "power_w", "conflicts with power_dbm; set only one");
    }
    if (const auto p = doc.real("power_dbm")) sc.power_budget = dbm_to_watts(*p);
    if (const auto p = doc.real("power_w")) sc.power_budget = positive(doc, "power_w", *p);
    if (!doc.has("power_dbm") && !doc.has("power_w")) sc.power_budget = dbm_to_watts(30.0);

    if (const auto g = doc.list("target_gains")) {
        if (static_cast<Index>(g->size()) != sc.n_targets) {
            fail_at(doc.line("target_gains"), "target_gains", "must list n_targets entries");
        }
        for (double x : *g) {
            if (x < 0.0) fail_at(doc.line("target_gains"), "target_gains", "entries must be >= 0");
        }
        sc.target_gains = *g;
    }

    const int n_noise = int(doc.has("sigma2_s_dbm")) + int(doc.has("sigma2_s_w")) + int(doc.has("sensing_snr_db"));
    if (n_noise > 1) {
        const std::string key = doc.has("sensing_snr_db") ? "sensing_snr_db" : "sigma2_s_w";
        fail_at(doc.line(key), key, "set only one of sigma2_s_dbm, sigma2_s_w, sensing_snr_db");
    }
    if (const auto s = doc.real("sigma2_s_dbm")) sc.sigma2_s = dbm_to_watts(*s);
    if (const auto s = doc.real("sigma2_s_w")) sc.sigma2_s = positive(doc, "sigma2_s_w", *s);
    if (n_noise == 0 || doc.has("sensing_snr_db")) {
        const double snr_db = doc.real("sensing_snr_db").value_or(10.0);
        double mean_gain = 1.0;
        if (!sc.target_gains.empty()) {
            mean_gain = std::accumulate(sc.target_gains.begin(), sc.target_gains.end(), 0.0) /
                        static_cast<double>(sc.target_gains.size());
        }
        if (!(mean_gain > 0.0)) {
            fail_at(doc.line("target_gains"), "target_gains", "sensing_snr_db needs a positive mean gain");
        }
        sc.sigma2_s = sc.power_budget * mean_gain / std::pow(10.0, snr_db / 10.0);
        spec.sensing_snr_db = snr_db;
    }

    if (doc.has("sigma2_c_dbm") && doc.has("sigma2_c_w")) {
        fail_at(doc.line("sigma2_c_w"), "sigma2_c_w", "conflicts with sigma2_c_dbm; set only one");
    }
    sc.sigma2_c = dbm_to_watts(0.0);
    if (const auto s = doc.real("sigma2_c_dbm")) sc.sigma2_c = dbm_to_watts(*s);
    if (const auto s = doc.real("sigma2_c_w")) sc.sigma2_c = positive(doc, "sigma2_c_w", *s);
    sc.comm_snr = std::pow(10.0, doc.real("comm_snr_db").value_or(20.0) / 10.0);

    if (const auto a = doc.real("antenna_spacing")) sc.antenna_spacing = positive(doc, "antenna_spacing", *a);
    if (const auto s = doc.unsigned64("seed")) sc.seed = *s;

    // Angles: explicit lists or a seeded range.
    if (doc.has("target_angles_deg") && doc.has("angle_range_deg")) {
        fail_at(doc.line("angle_range_deg"), "angle_range_deg", "conflicts with target_angles_deg; set only one");
    }
    if (const auto a = doc.list("target_angles_deg")) {
        if (static_cast<Index>(a->size()) != sc.n_targets) {
            fail_at(doc.line("target_angles_deg"), "target_angles_deg", "must list n_targets entries");
        }
        for (double d : *a) sc.target_angles_tx.push_back(radians(d));
        sc.target_angles_rx = sc.target_angles_tx;
    } else {
        const auto r = doc.list("angle_range_deg");
        std::pair<double, double> range{30.0, 60.0};
        if (r) {
            if (r->size() != 2 || !((*r)[0] <= (*r)[1])) {
                fail_at(doc.line("angle_range_deg"), "angle_range_deg", "expected 'lo, hi' with lo <= hi");
            }
            range = {(*r)[0], (*r)[1]};
        }
        spec.angle_range_deg = range;
        apply_seed(spec, sc.seed);
    }
    if (const auto a = doc.list("target_angles_rx_deg")) {
        if (static_cast<Index>(a->size()) != sc.n_targets) {
            fail_at(doc.line("target_angles_rx_deg"), "target_angles_rx_deg", "must list n_targets entries");
        }
        if (spec.angle_range_deg) {
            fail_at(doc.line("target_angles_rx_deg"), "target_angles_rx_deg",
                    "needs explicit target_angles_deg");
        }
        sc.target_angles_rx.clear();
        for (double d : *a) sc.target_angles_rx.push_back(radians(d));
    }

    if (const auto g = doc.list("grid")) {
        if (g->empty()) fail_at(doc.line("grid"), "grid", "must not be empty");
        spec.grid = *g;
    }
    spec.mc_trials = count_at_least(doc, "mc_trials", spec.mc_trials, 0);
    if (spec.mc_trials == 1) fail_at(doc.line("mc_trials"), "mc_trials", "must be 0 (skip) or >= 2");
    if (const auto o = doc.str("output")) spec.output_path = *o;
    spec.format = one_of<OutputFormat>(doc, "format", spec.format,
                                       {{"csv", OutputFormat::csv}, {"json", OutputFormat::json}});
    spec.precoder = one_of<PrecoderChoice>(doc, "precoder", spec.precoder,
                                           {{"isotropic", PrecoderChoice::isotropic},
                                            {"smi-optimal", PrecoderChoice::smi_optimal},
                                            {"upper-bound-optimal", PrecoderChoice::upper_bound_optimal}});

    spec.rate_unit = one_of<RateUnit>(doc, "rate_unit", spec.rate_unit,
                                      {{"nats", RateUnit::nats}, {"bits", RateUnit::bits}});
    const double unit = spec.rate_unit == RateUnit::bits ? std::numbers::ln2 : 1.0;
    if (const auto r = doc.real("rate_floor")) {
        if (*r < 0.0) fail_at(doc.line("rate_floor"), "rate_floor", "must be >= 0");
        spec.admm.rate_floor = *r * unit;
    }
    spec.rate_grid_relative = doc.boolean("rate_grid_relative").value_or(false);

    GpSettings& gp = spec.gp;
    gp.max_iters = static_cast<int>(count_at_least(doc, "gp_max_iters", gp.max_iters, 1));
    if (const auto v = doc.real("gp_grad_tol")) gp.grad_tol = positive(doc, "gp_grad_tol", *v);
    if (const auto v = doc.real("gp_initial_step")) gp.armijo.initial_step = positive(doc, "gp_initial_step", *v);
    if (const auto v = doc.real("gp_backtrack")) {
        if (!(*v > 0.0 && *v < 1.0)) fail_at(doc.line("gp_backtrack"), "gp_backtrack", "must lie in (0, 1)");
        gp.armijo.backtrack = *v;
    }
    if (const auto v = doc.real("gp_sufficient_decrease")) {
        if (!(*v > 0.0 && *v < 1.0)) {
            fail_at(doc.line("gp_sufficient_decrease"), "gp_sufficient_decrease", "must lie in (0, 1)");
        }
        gp.armijo.sufficient_decrease = *v;
    }
    if (const auto v = doc.real("gp_fixed_step")) gp.fixed_step = positive(doc, "gp_fixed_step", *v);
    gp.line_search = doc.boolean("gp_line_search").value_or(gp.line_search);
    gp.projection = one_of<Projection>(doc, "gp_projection", gp.projection,
                                       {{"euclidean", Projection::euclidean},
                                        {"clip-scale", Projection::clip_and_scale}});

    AdmmSettings& ad = spec.admm;
    if (const auto v = doc.real("admm_penalty")) ad.penalty = positive(doc, "admm_penalty", *v);
    if (const auto v = doc.real("admm_inner_step")) ad.inner_step = positive(doc, "admm_inner_step", *v);
    ad.max_outer = static_cast<int>(count_at_least(doc, "admm_max_outer", ad.max_outer, 1));
    ad.inner_iters = static_cast<int>(count_at_least(doc, "admm_inner_iters", ad.inner_iters, 1));
    if (const auto v = doc.real("admm_primal_tol")) ad.primal_tol = positive(doc, "admm_primal_tol", *v);

    if (const auto l = doc.list("dof_snr_db")) {
        for (std::size_t i = 1; i < l->size(); ++i) {
            if (!((*l)[i] > (*l)[i - 1])) fail_at(doc.line("dof_snr_db"), "dof_snr_db", "must be strictly increasing");
        }
        spec.dof_snr_db = *l;
    }

    doc.reject_unknown();
    try {
        sc.validate();
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    return spec;
}

std::vector<std::pair<std::string, std::string>> ExperimentSpec::resolved() const {
    std::vector<std::pair<std::string, std::string>> out;
    const SceneConfig& sc = scene;
    auto add = [&out](const std::string& k, const std::string& v) { out.emplace_back(k, v); };
    add("command", command ? command_name(*command) : "");
    add("n_tx", std::to_string(sc.n_tx));
    add("n_rx", std::to_string(sc.n_rx));
    add("n_comm", std::to_string(sc.n_comm));
    add("n_frames", std::to_string(sc.n_frames));
    add("n_targets", std::to_string(sc.n_targets));
    add("power_w", fmt_double(sc.power_budget));
    add("sigma2_s_w", fmt_double(sc.sigma2_s));
    add("sigma2_c_w", fmt_double(sc.sigma2_c));
    add("comm_snr", fmt_double(sc.comm_snr));
    std::vector<double> deg_tx;
    std::vector<double> deg_rx;
    for (double a : sc.target_angles_tx) deg_tx.push_back(degrees(a));
    for (double a : sc.target_angles_rx) deg_rx.push_back(degrees(a));
    add("target_angles_tx_deg", fmt_list(deg_tx));
    add("target_angles_rx_deg", fmt_list(deg_rx));
    add("target_gains", fmt_list(sc.target_gains));
    add("antenna_spacing", fmt_double(sc.antenna_spacing));
    add("seed", std::to_string(sc.seed));
    add("grid", fmt_list(grid));
    add("mc_trials", std::to_string(mc_trials));
    add("format", format == OutputFormat::csv ? "csv" : "json");
    add("precoder", precoder == PrecoderChoice::isotropic      ? "isotropic"
                    : precoder == PrecoderChoice::smi_optimal ? "smi-optimal"
                                                              : "upper-bound-optimal");
    add("rate_floor_nats", fmt_double(admm.rate_floor));
    add("rate_unit", rate_unit == RateUnit::nats ? "nats" : "bits");
    add("rate_grid_relative", rate_grid_relative ? "true" : "false");
    add("gp_max_iters", std::to_string(gp.max_iters));
    add("gp_grad_tol", fmt_double(gp.grad_tol));
    add("gp_initial_step", fmt_double(gp.armijo.initial_step));
    add("gp_backtrack", fmt_double(gp.armijo.backtrack));
    add("gp_sufficient_decrease", fmt_double(gp.armijo.sufficient_decrease));
    add("gp_fixed_step", gp.fixed_step ? fmt_double(*gp.fixed_step) : "");
    add("gp_line_search", gp.line_search ? "true" : "false");
    add("gp_projection", gp.projection == Projection::euclidean ? "euclidean" : "clip-scale");
    add("admm_penalty", fmt_double(admm.penalty));
    add("admm_inner_step", fmt_double(admm.inner_step));
    add("admm_max_outer", std::to_string(admm.max_outer));
    add("admm_inner_iters", std::to_string(admm.inner_iters));
    add("admm_primal_tol", fmt_double(admm.primal_tol));
    add("dof_snr_db", fmt_list(dof_snr_db));
    return out;
}

}  // namespace smi
