// riskpess: command-line front end for risk-aware offline policy learning.
//
//   riskpess gen-data   --env env.json --behavior beh.json --n 1000 --seed 7 --out data.jsonl
//   riskpess evaluate   --data data.jsonl --policy pi.json --risk '{"kind":"cvar","alpha":0.5}'
//   riskpess learn      --data data.jsonl --class class.json --risk risk.json --out result.json
//   riskpess coverage   --config coverage.json --out coverage.json
//   riskpess rate-curve --config rate.json --out rate.json
//
// Exit codes: 0 success, 2 validation error, 3 runtime error.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "riskpess/riskpess.hpp"

namespace fs = std::filesystem;
using namespace riskpess;
using io::json;
using io::ojson;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

/// Inline JSON if the argument starts with '{', otherwise a file path.
json json_arg(const std::string& arg, const std::string& what) {
    if (!arg.empty() && arg.front() == '{') return io::parse_json(arg, what);
    return io::read_json_file(arg);
}

std::string resolve_path(const fs::path& base_dir, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? p : (base_dir / path).string();
}

/// Writes JSON to `out` (stdout if empty) and the CSV next to it.
void emit(const std::string& out, const ojson& j, const std::string& csv) {
    const std::string text = j.dump(2) + "\n";
    if (out.empty()) {
        std::cout << text;
        return;
    }
    io::write_text(out, text);
    io::write_text(fs::path(out).replace_extension(".csv").string(), csv);
}

EstimatorKind estimator_arg(const std::string& s) { return parse_estimator(s); }

// ---------------------------------------------------------------- gen-data

struct GenDataArgs {
    std::string env_path, behavior_path, out;
    std::size_t n = 0;
    std::uint64_t seed = 0;
};

int cmd_gen_data(const GenDataArgs& a) {
    const Environment env = io::environment_from_json(io::read_json_file(a.env_path), a.env_path);
    const BehaviorSpec beh = io::behavior_from_json(io::read_json_file(a.behavior_path), a.behavior_path);
    const Dataset data = sample_dataset(env, beh, a.n, a.seed);
    const std::string text = io::dataset_to_string(data);
    if (a.out.empty()) {
        std::cout << text;
    } else {
        io::write_text(a.out, text);
        std::cerr << "wrote " << a.out << ": n=" << data.size() << " K=" << data.num_actions()
                  << " D=" << data.support().upper() << " contexts=" << data.num_contexts() << '\n';
    }
    return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvalArgs {
    std::string data_path, policy_path, risk = R"({"kind":"mean"})", estimator = "is",
                                        flavor = "hoeffding", model_path, dump_cdf, completion = "one";
    double delta = 0.05;
};

Completion completion_arg(const std::string& s) {
    if (s == "one") return Completion::one;
    if (s == "zero") return Completion::zero;
    throw ValidationError("unknown completion '" + s + "' (expected one or zero)");
}

int cmd_evaluate(const EvalArgs& a) {
    const Dataset data = io::read_dataset_file(a.data_path);
    const Policy pi = io::policy_from_json(io::read_json_file(a.policy_path), a.policy_path);
    pi.validate(data.num_contexts(), data.num_actions());
    const RiskFunctional rho = io::risk_from_json(json_arg(a.risk, "--risk"));
    const EstimatorKind kind = estimator_arg(a.estimator);
    const BoundFlavor flavor = parse_flavor(a.flavor);
    detail::require(a.delta > 0.0 && a.delta < 1.0, "delta must lie in (0, 1)");
    std::optional<TabularCdfModel> model;
    if (!a.model_path.empty()) model = io::model_from_json(io::read_json_file(a.model_path), a.model_path);
    const Completion completion = completion_arg(a.completion);

    const double L = lipschitz_constant(rho, data.support());
    const StepFn est = estimate_cdf(kind, data, pi, model ? &*model : nullptr, completion);
    const double rho_hat = evaluate_risk(rho, est, data.support());
    const Diagnostics diag = diagnostics(data, pi);
    const ConfidenceRadius radius = pointwise_bound(diag, data.size(), a.delta, flavor);

    ojson j;
    j["schema_version"] = io::kSchemaVersion;
    j["risk"] = io::to_json(rho);
    j["estimator"] = to_string(kind);
    j["flavor"] = to_string(flavor);
    j["delta"] = a.delta;
    j["lipschitz"] = L;
    j["rho_hat"] = rho_hat;
    j["pointwise_radius"] = radius.value;
    j["lcb"] = rho_hat - L * radius.value;
    j["diagnostics"] = io::to_json(diag);
    std::cout << j.dump(2) << '\n';
    if (!a.dump_cdf.empty()) io::write_text(a.dump_cdf, io::to_json(est).dump(2) + "\n");
    return 0;
}

// ---------------------------------------------------------------- learn

struct LearnArgs {
    std::string data_path, class_path, risk = R"({"kind":"mean"})", estimator = "is", flavor = "hoeffding",
                                       model_path, out, completion = "one";
    double delta = 0.05;
    std::optional<double> dr_bias, lipschitz;
    bool greedy = false;
};

int cmd_learn(const LearnArgs& a) {
    const Dataset data = io::read_dataset_file(a.data_path);
    const io::ClassFile cf = io::class_from_json(io::read_json_file(a.class_path), a.class_path);
    for (const auto& p : cf.policies) p.validate(data.num_contexts(), data.num_actions());
    const RiskFunctional rho = io::risk_from_json(json_arg(a.risk, "--risk"));

    BoundConfig cfg;
    cfg.delta = a.delta;
    cfg.estimator = estimator_arg(a.estimator);
    cfg.flavor = parse_flavor(a.flavor);
    cfg.dr_bias = a.dr_bias;
    cfg.validate();

    bool brute_forced = false;
    int dim = 0;
    if (cf.natarajan_dim) {
        dim = *cf.natarajan_dim;
    } else {
        dim = std::max(1, natarajan_dim_bruteforce(cf.policies, data.num_contexts()));
        brute_forced = true;
    }
    const PolicyClass cls(cf.policies, dim);

    std::optional<TabularCdfModel> model;
    if (!a.model_path.empty()) model = io::model_from_json(io::read_json_file(a.model_path), a.model_path);
    SelectOptions opts;
    opts.model = model ? &*model : nullptr;
    opts.completion = completion_arg(a.completion);
    opts.lipschitz_override = a.lipschitz;
    if (cfg.dr_bias) opts.dr_bias.assign(cls.size(), *cfg.dr_bias);

    const LearnResult res = a.greedy ? greedy_select(data, cls, rho, cfg, opts)
                                     : pessimistic_select(data, cls, rho, cfg, opts);
    ojson j = io::to_json(res);
    j["natarajan_dim_source"] = brute_forced ? "brute_force" : "class_file";
    emit(a.out, j, io::learn_csv(res));
    std::cerr << "selected policy " << res.selected << (res.greedy ? " (greedy)" : " (pessimistic)")
              << (res.tie ? ", tie broken toward smallest index" : "") << "; natarajan_dim " << dim
              << (brute_forced ? " (brute-forced)" : "") << '\n';
    return 0;
}

// ---------------------------------------------------------------- coverage

struct ExperimentArgs {
    std::string config_path, out;
    std::optional<std::uint64_t> seed;
    int threads = 0;
};

template <class T>
std::vector<T> scalar_or_list(const json& j, const char* key, const std::string& where, T fallback) {
    if (!j.contains(key)) return {fallback};
    if (j.at(key).is_array()) {
        auto v = io::get_field<std::vector<T>>(j, key, where);
        detail::require(!v.empty(), where + ": '" + key + "' is empty");
        return v;
    }
    return {io::get_field<T>(j, key, where)};
}

int cmd_coverage(const ExperimentArgs& a) {
    const json cfg = io::read_json_file(a.config_path);
    const std::string& where = a.config_path;
    io::check_keys(cfg, {"schema_version", "env", "behavior", "mode", "policies", "class", "natarajan_dim",
                         "estimator", "flavor", "delta", "n", "trials", "seed", "completion", "model"},
                   where);
    const fs::path dir = fs::path(a.config_path).parent_path();
    const std::string env_path = resolve_path(dir, io::get_field<std::string>(cfg, "env", where));
    const std::string beh_path = resolve_path(dir, io::get_field<std::string>(cfg, "behavior", where));
    const Environment env = io::environment_from_json(io::read_json_file(env_path), env_path);
    const BehaviorSpec beh = io::behavior_from_json(io::read_json_file(beh_path), beh_path);

    CoverageSpec base;
    const std::string mode = cfg.value("mode", std::string("pointwise"));
    if (mode == "pointwise") {
        base.mode = CoverageMode::pointwise;
    } else if (mode == "uniform") {
        base.mode = CoverageMode::uniform;
    } else {
        throw ValidationError(where + ": unknown mode '" + mode + "'");
    }
    std::optional<int> dim;
    if (cfg.contains("class")) {
        const std::string p = resolve_path(dir, io::get_field<std::string>(cfg, "class", where));
        io::ClassFile cf = io::class_from_json(io::read_json_file(p), p);
        base.policies = std::move(cf.policies);
        dim = cf.natarajan_dim;
    } else {
        for (const auto& t : io::get_field<std::vector<std::vector<ActionId>>>(cfg, "policies", where)) {
            base.policies.emplace_back(t);
        }
    }
    if (cfg.contains("natarajan_dim")) dim = io::get_field<int>(cfg, "natarajan_dim", where);
    detail::require(!base.policies.empty(), where + ": no policies");
    for (const auto& p : base.policies) p.validate(env.num_contexts(), env.num_actions());
    base.natarajan_dim =
        dim ? *dim : std::max(1, natarajan_dim_bruteforce(base.policies, env.num_contexts()));
    base.n = cfg.value("n", base.n);
    base.trials = cfg.value("trials", base.trials);
    base.seed = a.seed.value_or(cfg.value("seed", base.seed));
    base.completion = completion_arg(cfg.value("completion", std::string("one")));
    std::optional<TabularCdfModel> model;
    if (cfg.contains("model")) {
        const std::string p = resolve_path(dir, io::get_field<std::string>(cfg, "model", where));
        model = io::model_from_json(io::read_json_file(p), p);
    }

    const auto estimators = scalar_or_list<std::string>(cfg, "estimator", where, "is");
    const auto flavors = scalar_or_list<std::string>(cfg, "flavor", where, "hoeffding");
    const auto deltas = scalar_or_list<double>(cfg, "delta", where, 0.05);
    const unsigned threads = resolve_threads(a.threads);

    ojson reports = ojson::array();
    std::string csv = std::string(io::kCoverageCsvHeader) + "\n";
    for (const auto& e : estimators) {
        for (const auto& f : flavors) {
            for (double d : deltas) {
                CoverageSpec spec = base;
                spec.estimator = estimator_arg(e);
                spec.flavor = parse_flavor(f);
                spec.delta = d;
                if (spec.estimator == EstimatorKind::drc) {
                    if (!model) throw MissingModelError(where + ": estimator dr needs a 'model' file");
                    spec.model = &*model;
                }
                const CoverageReport rep = coverage_experiment(env, beh, spec, threads);
                reports.push_back(io::to_json(rep));
                csv += io::coverage_csv_row(rep);
                std::cerr << rep.mode << ' ' << rep.estimator << ' ' << rep.flavor << " delta=" << rep.delta
                          << ": violation rate " << rep.violation_rate << " (threshold " << rep.threshold
                          << ")\n";
            }
        }
    }
    ojson j;
    j["schema_version"] = io::kSchemaVersion;
    j["reports"] = reports;
    emit(a.out, j, csv);
    return 0;
}

// ---------------------------------------------------------------- rate-curve

int cmd_rate_curve(const ExperimentArgs& a, bool greedy_flag) {
    const json cfg = io::read_json_file(a.config_path);
    const std::string& where = a.config_path;
    io::check_keys(cfg, {"schema_version", "family", "env", "behavior", "class", "risk", "estimator", "delta",
                         "n_grid", "trials_per_n", "seed", "greedy"},
                   where);
    const fs::path dir = fs::path(a.config_path).parent_path();
    RateSpec spec;
    if (cfg.contains("family")) {
        detail::require(!cfg.contains("env"), where + ": give either 'family' or 'env', not both");
        const json& fj = cfg.at("family");
        const std::string fw = where + ".family";
        io::check_keys(fj, {"d", "K", "beta_inf", "delta_gap", "base_prob"}, fw);
        spec.family.d = fj.value("d", spec.family.d);
        spec.family.K = fj.value("K", spec.family.K);
        spec.family.beta_inf = fj.value("beta_inf", spec.family.beta_inf);
        if (fj.contains("delta_gap")) spec.family.delta_gap = io::get_field<double>(fj, "delta_gap", fw);
        spec.family.base_prob = fj.value("base_prob", spec.family.base_prob);
    } else {
        const std::string env_path = resolve_path(dir, io::get_field<std::string>(cfg, "env", where));
        const std::string beh_path = resolve_path(dir, io::get_field<std::string>(cfg, "behavior", where));
        const std::string cls_path = resolve_path(dir, io::get_field<std::string>(cfg, "class", where));
        Environment env = io::environment_from_json(io::read_json_file(env_path), env_path);
        BehaviorSpec beh = io::behavior_from_json(io::read_json_file(beh_path), beh_path);
        io::ClassFile cf = io::class_from_json(io::read_json_file(cls_path), cls_path);
        for (const auto& p : cf.policies) p.validate(env.num_contexts(), env.num_actions());
        const int dim = cf.natarajan_dim
                            ? *cf.natarajan_dim
                            : std::max(1, natarajan_dim_bruteforce(cf.policies, env.num_contexts()));
        spec.instance = RateInstance{std::move(env), std::move(beh), std::move(cf.policies), dim};
    }
    if (cfg.contains("risk")) spec.rho = io::risk_from_json(cfg.at("risk"), where + ".risk");
    spec.estimator = estimator_arg(cfg.value("estimator", std::string("is")));
    spec.delta = cfg.value("delta", spec.delta);
    spec.n_grid = io::get_field<std::vector<std::size_t>>(cfg, "n_grid", where);
    spec.trials_per_n = cfg.value("trials_per_n", spec.trials_per_n);
    spec.seed = a.seed.value_or(cfg.value("seed", spec.seed));
    spec.greedy = greedy_flag || cfg.value("greedy", false);

    const RateReport rep = rate_curve(spec, resolve_threads(a.threads));
    emit(a.out, io::to_json(rep), io::rate_csv(rep));
    std::cerr << "slope " << rep.slope << " (95% CI " << rep.slope - 1.96 * rep.slope_se << ", "
              << rep.slope + 1.96 * rep.slope_se << ") over " << rep.slope_points << " points; fitted c "
              << rep.fitted_c << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Risk-aware offline policy learning for contextual bandits"};
    app.require_subcommand(1);

    GenDataArgs gen;
    auto* g = app.add_subcommand("gen-data", "Sample a logged dataset from environment and behavior specs");
    g->add_option("--env", gen.env_path, "Environment JSON")->required();
    g->add_option("--behavior", gen.behavior_path, "Behavior propensity JSON")->required();
    g->add_option("--n", gen.n, "Number of rows")->required()->check(CLI::PositiveNumber);
    g->add_option("--seed", gen.seed, "RNG seed");
    g->add_option("--out", gen.out, "Output JSONL path (stdout if omitted)");

    EvalArgs ev;
    auto* e = app.add_subcommand("evaluate", "Plug-in risk estimate and pointwise confidence radius");
    e->add_option("--data", ev.data_path, "Dataset JSONL")->required();
    e->add_option("--policy", ev.policy_path, "Policy JSON")->required();
    e->add_option("--risk", ev.risk, "Risk functional as inline JSON or a file path");
    e->add_option("--estimator", ev.estimator, "is | wis | dr");
    e->add_option("--delta", ev.delta, "Confidence level");
    e->add_option("--flavor", ev.flavor, "hoeffding | bernstein");
    e->add_option("--model", ev.model_path, "Conditional CDF model JSON (required for dr)");
    e->add_option("--completion", ev.completion, "Value on uninformative rows: one | zero");
    e->add_option("--dump-cdf", ev.dump_cdf, "Write the estimated CDF as JSON");

    LearnArgs ln;
    auto* l = app.add_subcommand("learn", "Pessimistic (or greedy) policy selection over a class");
    l->add_option("--data", ln.data_path, "Dataset JSONL")->required();
    l->add_option("--class", ln.class_path, "Policy class JSON")->required();
    l->add_option("--risk", ln.risk, "Risk functional as inline JSON or a file path");
    l->add_option("--estimator", ln.estimator, "is | wis | dr");
    l->add_option("--delta", ln.delta, "Confidence level");
    l->add_option("--flavor", ln.flavor, "hoeffding | bernstein");
    l->add_option("--model", ln.model_path, "Conditional CDF model JSON (required for dr)");
    l->add_option("--dr-bias", ln.dr_bias, "Model bias term used by the dr radius");
    l->add_option("--lipschitz", ln.lipschitz, "Override the Lipschitz constant");
    l->add_option("--completion", ln.completion, "Value on uninformative rows: one | zero");
    l->add_option("--out", ln.out, "Result JSON path; the CSV table goes next to it");
    l->add_flag("--greedy", ln.greedy, "Maximize the plug-in estimate instead of the LCB");

    ExperimentArgs cov;
    auto* c = app.add_subcommand("coverage", "Empirical coverage of confidence radii");
    c->add_option("--config", cov.config_path, "Experiment config JSON")->required();
    c->add_option("--out", cov.out, "Report JSON path; the CSV goes next to it");
    c->add_option("--seed", cov.seed, "Override the config seed");
    c->add_option("--threads", cov.threads, "Worker threads (default: RISKPESS_THREADS or 1)");

    ExperimentArgs rate;
    bool rate_greedy = false;
    auto* r = app.add_subcommand("rate-curve", "Suboptimality versus sample size on a simulated family");
    r->add_option("--config", rate.config_path, "Experiment config JSON")->required();
    r->add_option("--out", rate.out, "Report JSON path; the CSV goes next to it");
    r->add_option("--seed", rate.seed, "Override the config seed");
    r->add_option("--threads", rate.threads, "Worker threads (default: RISKPESS_THREADS or 1)");
    r->add_flag("--greedy", rate_greedy, "Use the greedy learner");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        if (*g) return cmd_gen_data(gen);
        if (*e) return cmd_evaluate(ev);
        if (*l) return cmd_learn(ln);
        if (*c) return cmd_coverage(cov);
        if (*r) return cmd_rate_curve(rate, rate_greedy);
    } catch (const ValidationError& err) {
        std::cerr << "validation error: " << err.what() << '\n';
        return kExitValidation;
    } catch (const NotLipschitzError& err) {
        std::cerr << "not Lipschitz: " << err.what() << '\n';
        return kExitValidation;
    } catch (const MissingModelError& err) {
        std::cerr << "missing model: " << err.what() << '\n';
        return kExitValidation;
    } catch (const json::exception& err) {
        std::cerr << "validation error: " << err.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
