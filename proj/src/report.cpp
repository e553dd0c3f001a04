#include "merchant/report.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <limits>
#include <vector>

#include "merchant/coins.hpp"
#include "merchant/errors.hpp"
#include "merchant/gauss.hpp"
#include "merchant/halting.hpp"
#include "merchant/sections.hpp"
#include "merchant/wiener.hpp"

namespace merchant::report {

using nlohmann::json;

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

// ---- config access with pointer-addressed error messages ----

const json& field(const json& j, const std::string& name, const std::string& ctx) {
    if (!j.contains(name))
        throw InvalidConfig("config: missing field '" + ctx + "/" + name + "'");
    return j.at(name);
}

double num_field(const json& j, const std::string& name, const std::string& ctx) {
    const json& v = field(j, name, ctx);
    if (!v.is_number()) throw InvalidConfig("config: '" + ctx + "/" + name + "' must be a number");
    return v.get<double>();
}

double num_or(const json& j, const std::string& name, double fallback, const std::string& ctx) {
    if (!j.contains(name)) return fallback;
    return num_field(j, name, ctx);
}

std::int64_t int_field(const json& j, const std::string& name, const std::string& ctx) {
    const json& v = field(j, name, ctx);
    if (!v.is_number_integer())
        throw InvalidConfig("config: '" + ctx + "/" + name + "' must be an integer");
    return v.get<std::int64_t>();
}

std::int64_t int_or(const json& j, const std::string& name, std::int64_t fallback,
                    const std::string& ctx) {
    if (!j.contains(name)) return fallback;
    return int_field(j, name, ctx);
}

std::string str_field(const json& j, const std::string& name, const std::string& ctx) {
    const json& v = field(j, name, ctx);
    if (!v.is_string()) throw InvalidConfig("config: '" + ctx + "/" + name + "' must be a string");
    return v.get<std::string>();
}

std::string str_or(const json& j, const std::string& name, const std::string& fallback,
                   const std::string& ctx) {
    if (!j.contains(name)) return fallback;
    return str_field(j, name, ctx);
}

template <typename T>
std::vector<T> grid_field(const json& j, const std::string& name, const std::string& ctx) {
    const json& v = field(j, name, ctx);
    if (!v.is_array() || v.empty())
        throw InvalidConfig("config: '" + ctx + "/" + name + "' must be a non-empty array");
    std::vector<T> out;
    out.reserve(v.size());
    for (const auto& e : v) {
        if (!e.is_number())
            throw InvalidConfig("config: '" + ctx + "/" + name + "' must hold numbers");
        out.push_back(e.get<T>());
    }
    return out;
}

// ---- CSV emission ----

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
        : out_(path) {
        if (!out_) throw InvalidConfig("cannot open output file " + path.string());
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) out_ << ',';
            out_ << header[i];
        }
        out_ << '\n';
        columns_ = header.size();
    }

    void row(const std::vector<std::string>& cells) {
        if (cells.size() != columns_) throw Error("csv row width mismatch");
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

private:
    std::ofstream out_;
    std::size_t columns_;
};

std::string fmt(double v) { return format_double(v); }
std::string fmt(std::int64_t v) { return std::to_string(v); }
std::string fmt(std::uint64_t v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

TimeScale scale_from_config(const json& params, const std::string& ctx) {
    if (!params.contains("scale")) return TimeScale::exp2();
    const json& s = params.at("scale");
    if (s.is_string()) return TimeScale::by_name(s.get<std::string>());
    if (s.is_object()) {
        const std::string name = str_field(s, "name", ctx + "/scale");
        if (name != "custom")
            throw InvalidConfig("config: '" + ctx + "/scale/name' must be \"custom\"");
        return TimeScale::custom(grid_field<double>(s, "deltas", ctx + "/scale"));
    }
    throw InvalidConfig("config: '" + ctx + "/scale' must be a name or {name, deltas}");
}

ToyProgram program_from_config(const json& params, const std::string& ctx) {
    const json& p = field(params, "program", ctx);
    const std::string kind = str_field(p, "kind", ctx + "/program");
    const std::int64_t budget = int_or(params, "step_budget", 1'000'000, ctx);
    if (kind == "bounded-loop")
        return ToyProgram::bounded_loop(int_field(p, "k", ctx + "/program"), budget);
    if (kind == "diverge") return ToyProgram::diverge(budget);
    if (kind == "counter-machine") {
        const json& instrs = field(p, "instructions", ctx + "/program");
        if (!instrs.is_array() || instrs.empty())
            throw InvalidConfig("config: counter-machine instructions must be a non-empty array");
        CounterMachine m;
        for (const auto& row : instrs) {
            if (!row.is_array() || row.empty() || !row[0].is_string())
                throw InvalidConfig("config: instruction must be [\"op\", args...]");
            const std::string op = row[0].get<std::string>();
            CounterMachine::Instr ins{};
            auto arg = [&](std::size_t i) {
                if (row.size() <= i || !row[i].is_number_integer())
                    throw InvalidConfig("config: instruction '" + op + "' needs integer arg " +
                                        std::to_string(i));
                return row[i].get<int>();
            };
            if (op == "inc") {
                ins.op = CounterMachine::Op::kInc;
                ins.reg = arg(1);
            } else if (op == "dec") {
                ins.op = CounterMachine::Op::kDec;
                ins.reg = arg(1);
            } else if (op == "jmp") {
                ins.op = CounterMachine::Op::kJmp;
                ins.target = arg(1);
            } else if (op == "jz") {
                ins.op = CounterMachine::Op::kJz;
                ins.reg = arg(1);
                ins.target = arg(2);
            } else if (op == "jnz") {
                ins.op = CounterMachine::Op::kJnz;
                ins.reg = arg(1);
                ins.target = arg(2);
            } else if (op == "halt") {
                ins.op = CounterMachine::Op::kHalt;
            } else {
                throw InvalidConfig("config: unknown instruction '" + op + "'");
            }
            m.instrs.push_back(ins);
        }
        return ToyProgram::counter_machine(std::move(m), budget);
    }
    throw InvalidConfig("config: '" + ctx + "/program/kind' must be bounded-loop, diverge, or counter-machine");
}

// ---- experiment runners; each returns {csv file name, results json} ----

struct RunOutput {
    std::string csv_name;
    json results;
};

RunOutput run_finite(const json& params, std::uint64_t seed, std::int64_t trials_override,
                     const std::filesystem::path& out_dir) {
    const std::string ctx = "params";
    const std::int64_t n = int_field(params, "n_stacks", ctx);
    const double gamma = num_field(params, "gamma", ctx);
    const double epsilon = num_field(params, "epsilon", ctx);
    const double eta = num_field(params, "eta", ctx);
    const std::int64_t false_stack = int_field(params, "false_stack", ctx);
    const auto t_grid = grid_field<std::int64_t>(params, "t_grid", ctx);
    std::int64_t trials = trials_override > 0 ? trials_override : int_field(params, "trials", ctx);
    const double prior =
        num_or(params, "prior_no_false", 1.0 / (static_cast<double>(n) + 1.0), ctx);
    DeviceConfig{epsilon, eta, gamma}.validate();
    const CoinSystem system = CoinSystem::with_false(n, false_stack, gamma);
    for (std::int64_t t : t_grid)
        if (t < 1) throw InvalidConfig("config: finite t_grid entries must be >= 1");
    if (trials < 1) throw InvalidConfig("config: trials must be >= 1");

    CsvWriter csv(out_dir / "finite.csv",
                  {"kind", "seed", "trials", "n_stacks", "false_stack", "gamma", "epsilon", "eta",
                   "t", "p_hat", "std_err", "upper95", "bound_small", "bound_large", "bound_total",
                   "bound_simplified", "posterior", "posterior_lower"});
    json rows = json::array();
    for (std::int64_t t : t_grid) {
        const McEstimate est = mc_indistinguishable_probability(system, epsilon, t, trials, seed);
        const BoundBreakdown b = bound_total(n, epsilon, gamma, t);
        const BayesPosterior bayes = bayes_posterior_finite(prior, est.p_hat, n);
        csv.row({std::string("finite"), fmt(seed), fmt(trials), fmt(n), fmt(false_stack), fmt(gamma),
                 fmt(epsilon), fmt(eta), fmt(t), fmt(est.p_hat), fmt(est.std_err),
                 fmt(est.upper95), fmt(b.small_norm_term), fmt(b.large_norm_term), fmt(b.total),
                 fmt(clamp_probability(b.simplified)), fmt(bayes.posterior),
                 fmt(bayes.lower_bound)});
        rows.push_back({{"t", t},
                        {"p_hat", est.p_hat},
                        {"std_err", est.std_err},
                        {"bound_simplified", clamp_probability(b.simplified)},
                        {"posterior", bayes.posterior}});
    }
    json results;
    results["rows"] = rows;
    results["t_eta"] = t_eta_finite(n, epsilon, gamma, eta);
    return {"finite.csv", results};
}

RunOutput run_bounds(const json& params, const std::filesystem::path& out_dir) {
    const std::string ctx = "params";
    const std::int64_t n = int_field(params, "n_stacks", ctx);
    const double gamma = num_field(params, "gamma", ctx);
    const double epsilon = num_field(params, "epsilon", ctx);
    const double eta = num_field(params, "eta", ctx);
    const auto t_grid = grid_field<std::int64_t>(params, "t_grid", ctx);
    const double prior =
        num_or(params, "prior_no_false", 1.0 / (static_cast<double>(n) + 1.0), ctx);
    DeviceConfig{epsilon, eta, gamma}.validate();
    for (std::int64_t t : t_grid)
        if (t < 1) throw InvalidConfig("config: bounds t_grid entries must be >= 1");

    const double t_eta = t_eta_finite(n, epsilon, gamma, eta);
    CsvWriter csv(out_dir / "bounds.csv",
                  {"kind", "n_stacks", "gamma", "epsilon", "eta", "t", "m_star", "bound_small",
                   "bound_large", "bound_total", "bound_simplified", "bound_simplified_clamped",
                   "t_eta", "posterior", "posterior_lower"});
    json rows = json::array();
    for (std::int64_t t : t_grid) {
        const BoundBreakdown b = bound_total(n, epsilon, gamma, t);
        const double prob_f = clamp_probability(b.simplified);
        const BayesPosterior bayes = bayes_posterior_finite(prior, prob_f, n);
        csv.row({std::string("bounds"), fmt(n), fmt(gamma), fmt(epsilon), fmt(eta), fmt(t), fmt(b.m_star),
                 fmt(b.small_norm_term), fmt(b.large_norm_term), fmt(b.total), fmt(b.simplified),
                 fmt(prob_f), fmt(t_eta), fmt(bayes.posterior), fmt(bayes.lower_bound)});
        rows.push_back({{"t", t}, {"bound_simplified", prob_f}, {"posterior", bayes.posterior}});
    }
    json results;
    results["rows"] = rows;
    results["t_eta"] = t_eta;
    return {"bounds.csv", results};
}

RunOutput run_tentative(const json& params, const std::filesystem::path& out_dir) {
    const std::string ctx = "params";
    const double gamma = num_field(params, "gamma", ctx);
    const double epsilon = num_field(params, "epsilon", ctx);
    const std::string mode = str_field(params, "mode", ctx);
    const auto n_grid = grid_field<std::int64_t>(params, "n_grid", ctx);
    const double prior = num_or(params, "prior_no_false", 0.5, ctx);
    for (std::int64_t n : n_grid)
        if (n < 1) throw InvalidConfig("config: tentative n_grid entries must be >= 1");

    std::vector<SectionRow> rows;
    if (mode == "fixed-T") {
        double t;
        if (params.contains("alpha")) {
            const double alpha = num_field(params, "alpha", ctx);
            t = SectionSpec::from_alpha(1, epsilon, gamma, alpha).t;
        } else {
            t = num_field(params, "T", ctx);
        }
        rows = discontinuity_demo(epsilon, gamma, t, n_grid, prior);
    } else if (mode == "coupled") {
        const double gate_exp = num_or(params, "gate_exponent", -0.25, ctx);
        if (!(gate_exp < 0.0))
            throw InvalidConfig("config: tentative gate_exponent must be negative");
        // gate n^e  =>  (1+gamma)^T - 1 = eps * n^(1-2e)
        auto t_of_n = [epsilon, gamma, gate_exp](std::int64_t n) {
            const double nd = static_cast<double>(n);
            return std::log1p(epsilon * std::pow(nd, 1.0 - 2.0 * gate_exp)) / std::log1p(gamma);
        };
        rows = coupled_scaling_demo(n_grid, t_of_n, epsilon, gamma, prior);
    } else {
        throw InvalidConfig("config: tentative mode must be \"fixed-T\" or \"coupled\"");
    }

    CsvWriter csv(out_dir / "tentative.csv",
                  {"kind", "mode", "epsilon", "gamma", "prior_no_false", "n", "alpha",
                   "scaled_gate", "T", "measure", "limit", "posterior"});
    json jrows = json::array();
    for (const SectionRow& r : rows) {
        csv.row({std::string("tentative"), mode, fmt(epsilon), fmt(gamma), fmt(prior), fmt(r.n),
                 fmt(r.alpha), fmt(r.scaled_gate), fmt(r.t), fmt(r.measure), fmt(r.limit),
                 fmt(r.posterior)});
        jrows.push_back({{"n", r.n},
                         {"alpha", r.alpha},
                         {"measure", r.measure},
                         {"limit", r.limit},
                         {"posterior", r.posterior}});
    }
    json results;
    results["rows"] = jrows;
    return {"tentative.csv", results};
}

RunOutput run_brownian(const json& params, std::uint64_t seed, std::int64_t trials_override,
                       const std::filesystem::path& out_dir) {
    const std::string ctx = "params";
    const double gamma = num_field(params, "gamma", ctx);
    const double epsilon = num_field(params, "epsilon", ctx);
    const double eta = num_field(params, "eta", ctx);
    const auto t_grid = grid_field<double>(params, "T_grid", ctx);
    const std::int64_t length = int_or(params, "length", 64, ctx);
    std::int64_t trials = trials_override > 0 ? trials_override : int_field(params, "trials", ctx);
    const std::int64_t j = int_or(params, "j", 1, ctx);
    const std::string mode_name = str_or(params, "mode", "injected", ctx);
    const double prior = num_or(params, "prior_no_false", 0.5, ctx);
    DeviceConfig{epsilon, eta, gamma}.validate();
    const TimeScale scale = scale_from_config(params, ctx);
    if (!scale.perturbed())
        throw InvalidConfig("config: brownian experiments need a perturbed scale");
    if (length < 1) throw InvalidConfig("config: length must be >= 1");
    if (j < 1 || j > length) throw InvalidConfig("config: j must lie in 1..length");
    if (trials < 1) throw InvalidConfig("config: trials must be >= 1");
    FalseIndexMode mode;
    if (mode_name == "injected") {
        mode = FalseIndexMode::kInjected;
    } else if (mode_name == "sup") {
        mode = FalseIndexMode::kSupremum;
    } else {
        throw InvalidConfig("config: brownian mode must be \"injected\" or \"sup\"");
    }

    const double t_eta = t_eta_brownian(epsilon, gamma, eta, scale);
    CsvWriter csv(out_dir / "brownian.csv",
                  {"kind", "seed", "trials", "scale", "length", "j", "mode", "gamma", "epsilon",
                   "eta", "T", "estimate_direct", "std_err_direct", "estimate_reweighted",
                   "std_err_reweighted", "ess", "agree_3se", "bound_raw", "bound_clamped",
                   "bound_applicable", "t_eta", "posterior_lower", "posterior_point"});
    json rows = json::array();
    for (double t_exp : t_grid) {
        const WienerMcResult r = mc_wiener_indistinguishable(j, gamma, epsilon, t_exp, scale,
                                                             length, trials, seed, mode);
        const bool applicable = r.bound_raw.has_value();
        double post_lower = std::numeric_limits<double>::quiet_NaN();
        double post_point = std::numeric_limits<double>::quiet_NaN();
        if (applicable) {
            const BrownianPosterior p =
                bayes_posterior_brownian(prior, epsilon, gamma, t_exp, scale);
            post_lower = p.lower_bound;
            post_point = p.point;
        }
        csv.row({std::string("brownian"), fmt(seed), fmt(trials), scale.name(), fmt(length), fmt(j),
                 mode_name, fmt(gamma), fmt(epsilon), fmt(eta), fmt(t_exp),
                 fmt(r.direct.p_hat), fmt(r.direct.std_err), fmt(r.reweighted.estimate),
                 fmt(r.reweighted.std_err), fmt(r.reweighted.ess), fmt(r.agree_3se),
                 fmt(r.bound_raw.value_or(std::numeric_limits<double>::quiet_NaN())),
                 fmt(r.bound_clamped.value_or(std::numeric_limits<double>::quiet_NaN())),
                 fmt(applicable), fmt(t_eta), fmt(post_lower), fmt(post_point)});
        rows.push_back({{"T", t_exp},
                        {"estimate_direct", r.direct.p_hat},
                        {"estimate_reweighted", r.reweighted.estimate},
                        {"agree_3se", r.agree_3se},
                        {"bound_clamped",
                         applicable ? json(*r.bound_clamped) : json(nullptr)}});
    }
    json results;
    results["rows"] = rows;
    results["t_eta"] = t_eta;
    return {"brownian.csv", results};
}

RunOutput run_halting(const json& params, std::uint64_t seed, std::int64_t trials_override,
                      const std::filesystem::path& out_dir) {
    const std::string ctx = "params";
    const double gamma = num_field(params, "gamma", ctx);
    const double epsilon = num_field(params, "epsilon", ctx);
    const double eta = num_field(params, "eta", ctx);
    const double t_exp = num_field(params, "T", ctx);
    const std::int64_t length = int_or(params, "length", 64, ctx);
    std::int64_t trials = trials_override > 0 ? trials_override : int_field(params, "trials", ctx);
    const double prior = num_or(params, "prior_no_false", 0.5, ctx);
    const DeviceConfig config{epsilon, eta, gamma};
    config.validate();
    const TimeScale scale = scale_from_config(params, ctx);
    const ToyProgram program = program_from_config(params, ctx);
    if (trials < 1) throw InvalidConfig("config: trials must be >= 1");

    const Verdict v =
        run_device(program, config, scale, length, t_exp, trials, seed, prior);

    CsvWriter csv(out_dir / "halting.csv",
                  {"kind", "seed", "program", "gamma", "epsilon", "eta", "T", "length", "trials",
                   "verdict", "witness", "witness_confirmed", "clicks", "posterior_lower",
                   "horizon_blind", "halt_known", "halt_step", "device_sim_steps",
                   "total_sim_steps"});
    const bool click = v.kind == Verdict::Kind::kClick;
    csv.row({std::string("halting"), fmt(seed), program.describe(), fmt(gamma), fmt(epsilon), fmt(eta),
             fmt(t_exp), fmt(length), fmt(trials), click ? "CLICK" : "NON-CLICK",
             v.witness ? fmt(*v.witness) : "", fmt(v.witness_confirmed), fmt(v.clicks),
             v.posterior_lower ? fmt(*v.posterior_lower) : "", fmt(v.horizon_blind),
             fmt(v.halt_known), v.halt_step ? fmt(*v.halt_step) : "", fmt(v.device_sim_steps),
             fmt(v.total_sim_steps)});

    json results;
    results["verdict"] = click ? "CLICK" : "NON-CLICK";
    results["clicks"] = v.clicks;
    if (v.witness) results["witness"] = *v.witness;
    results["witness_confirmed"] = v.witness_confirmed;
    if (v.posterior_lower) results["posterior_lower"] = *v.posterior_lower;
    results["horizon_blind"] = v.horizon_blind;
    results["device_sim_steps"] = v.device_sim_steps;
    return {"halting.csv", results};
}

}  // namespace

json run(const std::string& kind, const std::string& config_path, const Overrides& overrides) {
    json config;
    {
        std::ifstream in(config_path);
        if (!in) throw InvalidConfig("config: cannot open " + config_path);
        try {
            config = json::parse(in);
        } catch (const json::parse_error& e) {
            throw InvalidConfig("config: " + std::string(e.what()));
        }
    }
    if (!config.is_object()) throw InvalidConfig("config: top level must be an object");
    if (config.contains("kind") && (!config.at("kind").is_string() ||
                                    config.at("kind").get<std::string>() != kind))
        throw InvalidConfig("config: field 'kind' does not match subcommand '" + kind + "'");
    if (!overrides.seed && !(config.contains("seed") && config.at("seed").is_number_unsigned()))
        throw InvalidConfig(
            "config: field 'seed' must be an unsigned integer (no wall-clock default)");
    const std::uint64_t seed =
        overrides.seed ? *overrides.seed : config.at("seed").get<std::uint64_t>();
    const std::string out_name =
        overrides.out_dir ? *overrides.out_dir : str_or(config, "out_dir", "out", "");
    const std::int64_t trials_override = overrides.trials.value_or(0);
    const json params = config.contains("params") ? config.at("params") : json::object();

    const std::filesystem::path out_dir(out_name);
    std::filesystem::create_directories(out_dir);

    RunOutput out;
    try {
        if (kind == "finite") {
            out = run_finite(params, seed, trials_override, out_dir);
        } else if (kind == "bounds") {
            out = run_bounds(params, out_dir);
        } else if (kind == "tentative") {
            out = run_tentative(params, out_dir);
        } else if (kind == "brownian") {
            out = run_brownian(params, seed, trials_override, out_dir);
        } else if (kind == "halting") {
            out = run_halting(params, seed, trials_override, out_dir);
        } else {
            throw InvalidConfig("config: unknown experiment kind '" + kind + "'");
        }
    } catch (const json::exception& e) {
        // malformed field types surface as config errors, not crashes
        throw InvalidConfig("config: " + std::string(e.what()));
    }

    json summary;
    summary["version"] = kVersion;
    summary["kind"] = kind;
    summary["seed"] = seed;
    summary["config"] = config;
    summary["outputs"] = json::array({out.csv_name});
    summary["results"] = out.results;
    {
        std::ofstream s(out_dir / "summary.json");
        if (!s) throw InvalidConfig("cannot open output file " + (out_dir / "summary.json").string());
        s << summary.dump(2) << '\n';
    }
    return summary;
}

}  // namespace merchant::report
