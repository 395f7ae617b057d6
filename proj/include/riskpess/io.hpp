#pragma once

// JSON / JSONL / CSV formats for datasets, specs, configs and reports.
//
// Output objects are written with a fixed key order (ordered_json) and every
// report carries "schema_version". Numbers are written in shortest
// round-trip form, so read -> write reproduces dataset files bit for bit.

#include <cstddef>
#include <fstream>
#include <initializer_list>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "riskpess/bounds.hpp"
#include "riskpess/dataset.hpp"
#include "riskpess/error.hpp"
#include "riskpess/estimators.hpp"
#include "riskpess/experiments.hpp"
#include "riskpess/learner.hpp"
#include "riskpess/risk.hpp"
#include "riskpess/simlab.hpp"
#include "riskpess/step_fn.hpp"

namespace riskpess::io {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

// ---------------------------------------------------------------- helpers

inline void check_keys(const json& j, std::initializer_list<const char*> allowed,
                       const std::string& where) {
    detail::require(j.is_object(), where + ": expected a JSON object");
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || item.key() == a;
        detail::require(ok, where + ": unknown key '" + item.key() + "'");
    }
}

template <class T>
T get_field(const json& j, const char* key, const std::string& where) {
    detail::require(j.contains(key), where + ": missing key '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ValidationError(where + ": bad value for '" + key + "': " + e.what());
    }
}

inline json parse_json(const std::string& text, const std::string& where) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(where + ": " + e.what());
    }
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline json read_json_file(const std::string& path) { return parse_json(read_text(path), path); }

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write file '" + path + "'");
    out << text;
    if (!out) throw Error("write failed for '" + path + "'");
}

/// Shortest round-trip decimal form, as used in JSON output.
inline std::string fmt_num(double v) { return json(v).dump(); }

// ---------------------------------------------------------------- StepFn

inline ojson to_json(const StepFn& f) {
    ojson j;
    j["base"] = f.base();
    j["breakpoints"] = f.breakpoints();
    j["values"] = f.values();
    return j;
}

inline StepFn step_fn_from_json(const json& j, const std::string& where = "StepFn") {
    check_keys(j, {"base", "breakpoints", "values"}, where);
    return StepFn(get_field<double>(j, "base", where),
                  get_field<std::vector<double>>(j, "breakpoints", where),
                  get_field<std::vector<double>>(j, "values", where));
}

// ---------------------------------------------------------------- risk

inline std::vector<std::pair<double, double>> knots_from_json(const json& j,
                                                              const std::string& where) {
    check_keys(j, {"knots"}, where);
    std::vector<std::pair<double, double>> knots;
    for (const auto& k : get_field<std::vector<std::vector<double>>>(j, "knots", where)) {
        detail::require(k.size() == 2, where + ": each knot must be [x, y]");
        knots.emplace_back(k[0], k[1]);
    }
    return knots;
}

inline ojson knots_to_json(const std::vector<std::pair<double, double>>& knots) {
    ojson arr = ojson::array();
    for (const auto& [x, y] : knots) arr.push_back({x, y});
    return ojson{{"knots", arr}};
}

inline RiskFunctional risk_from_json(const json& j, const std::string& where = "risk") {
    detail::require(j.is_object(), where + ": expected a JSON object");
    const auto kind = get_field<std::string>(j, "kind", where);
    RiskFunctional rho;
    if (kind == "mean") {
        check_keys(j, {"kind"}, where);
        rho = risk::Mean{};
    } else if (kind == "variance") {
        check_keys(j, {"kind"}, where);
        rho = risk::Variance{};
    } else if (kind == "mean_variance") {
        check_keys(j, {"kind", "alpha"}, where);
        rho = risk::MeanVariance{get_field<double>(j, "alpha", where)};
    } else if (kind == "entropic") {
        check_keys(j, {"kind", "alpha"}, where);
        rho = risk::Entropic{get_field<double>(j, "alpha", where)};
    } else if (kind == "var") {
        check_keys(j, {"kind", "alpha"}, where);
        rho = risk::VaR{get_field<double>(j, "alpha", where)};
    } else if (kind == "cvar") {
        check_keys(j, {"kind", "alpha"}, where);
        rho = risk::CVaR{get_field<double>(j, "alpha", where)};
    } else if (kind == "distorted") {
        check_keys(j, {"kind", "g"}, where);
        detail::require(j.contains("g"), where + ": missing key 'g'");
        rho = risk::Distorted{DistortionFn(knots_from_json(j.at("g"), where + ".g"))};
    } else if (kind == "cpt") {
        check_keys(j, {"kind", "u_plus", "w_plus"}, where);
        detail::require(j.contains("u_plus") && j.contains("w_plus"),
                        where + ": cpt needs 'u_plus' and 'w_plus'");
        rho = risk::CPT{PiecewiseLinear(knots_from_json(j.at("u_plus"), where + ".u_plus")),
                        DistortionFn(knots_from_json(j.at("w_plus"), where + ".w_plus"))};
    } else {
        throw ValidationError(where + ": unknown risk kind '" + kind + "'");
    }
    validate_risk(rho);
    return rho;
}

inline ojson to_json(const RiskFunctional& rho) {
    ojson j;
    j["kind"] = risk_name(rho);
    std::visit(
        [&j](const auto& r) {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, risk::MeanVariance> || std::is_same_v<T, risk::Entropic> ||
                          std::is_same_v<T, risk::VaR> || std::is_same_v<T, risk::CVaR>) {
                j["alpha"] = r.alpha;
            } else if constexpr (std::is_same_v<T, risk::Distorted>) {
                j["g"] = knots_to_json(r.g.knots());
            } else if constexpr (std::is_same_v<T, risk::CPT>) {
                j["u_plus"] = knots_to_json(r.u_plus.knots());
                j["w_plus"] = knots_to_json(r.w_plus.knots());
            }
        },
        rho);
    return j;
}

// ---------------------------------------------------------------- bound config

inline BoundConfig bound_config_from_json(const json& j, const std::string& where = "bound config") {
    check_keys(j, {"delta", "flavor", "estimator", "dr_bias"}, where);
    BoundConfig c;
    if (j.contains("delta")) c.delta = get_field<double>(j, "delta", where);
    if (j.contains("flavor")) c.flavor = parse_flavor(get_field<std::string>(j, "flavor", where));
    if (j.contains("estimator")) {
        c.estimator = parse_estimator(get_field<std::string>(j, "estimator", where));
    }
    if (j.contains("dr_bias")) c.dr_bias = get_field<double>(j, "dr_bias", where);
    c.validate();
    return c;
}

inline ojson to_json(const BoundConfig& c) {
    ojson j;
    j["delta"] = c.delta;
    j["flavor"] = to_string(c.flavor);
    j["estimator"] = to_string(c.estimator);
    if (c.dr_bias) j["dr_bias"] = *c.dr_bias;
    return j;
}

// ---------------------------------------------------------------- dataset JSONL

inline std::string dataset_header_line(const Dataset& data) {
    ojson h;
    h["K"] = data.num_actions();
    h["D"] = data.support().upper();
    h["n_contexts"] = data.num_contexts();
    return h.dump();
}

inline std::string sample_line(const LoggedSample& s) {
    ojson r;
    r["x"] = s.context;
    r["a"] = s.action;
    r["y"] = s.reward;
    r["beta"] = s.propensities;
    return r.dump();
}

inline void write_dataset(std::ostream& out, const Dataset& data) {
    out << dataset_header_line(data) << '\n';
    for (const auto& s : data.samples()) out << sample_line(s) << '\n';
}

inline std::string dataset_to_string(const Dataset& data) {
    std::ostringstream ss;
    write_dataset(ss, data);
    return ss.str();
}

/// Errors name the 1-based line number.
inline Dataset read_dataset(std::istream& in, const std::string& name = "dataset") {
    std::string line;
    std::size_t lineno = 0;
    auto where = [&] { return name + ":" + std::to_string(lineno); };
    detail::require(static_cast<bool>(std::getline(in, line)), name + ": empty file");
    lineno = 1;
    const json header = parse_json(line, where());
    check_keys(header, {"K", "D", "n_contexts"}, where());
    const auto K = get_field<std::size_t>(header, "K", where());
    const auto D = get_field<double>(header, "D", where());
    const auto n_contexts = get_field<std::size_t>(header, "n_contexts", where());
    const SupportInterval support(D);

    std::vector<LoggedSample> rows;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const json r = parse_json(line, where());
        check_keys(r, {"x", "a", "y", "beta"}, where());
        LoggedSample s;
        s.context = get_field<std::size_t>(r, "x", where());
        s.action = get_field<std::size_t>(r, "a", where());
        s.reward = get_field<double>(r, "y", where());
        s.propensities = get_field<std::vector<double>>(r, "beta", where());
        try {
            // validate the row on its own so the message carries the line number
            Dataset({s}, K, support, n_contexts);
        } catch (const ValidationError& e) {
            throw ValidationError(where() + ": " + e.what());
        }
        rows.push_back(std::move(s));
    }
    detail::require(!rows.empty(), name + ": dataset has no samples");
    return Dataset(std::move(rows), K, support, n_contexts);
}

inline Dataset read_dataset_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open dataset '" + path + "'");
    return read_dataset(in, path);
}

// ---------------------------------------------------------------- environment / behavior

inline Environment environment_from_json(const json& j, const std::string& where = "environment") {
    check_keys(j, {"schema_version", "K", "D", "context_probs", "rewards"}, where);
    const auto K = get_field<std::size_t>(j, "K", where);
    const SupportInterval support(get_field<double>(j, "D", where));
    const auto probs = get_field<std::vector<double>>(j, "context_probs", where);
    const auto raw = get_field<std::vector<std::vector<std::vector<std::vector<double>>>>>(
        j, "rewards", where);
    std::vector<std::vector<std::vector<Atom>>> rewards(raw.size());
    for (std::size_t x = 0; x < raw.size(); ++x) {
        for (std::size_t a = 0; a < raw[x].size(); ++a) {
            std::vector<Atom> atoms;
            for (const auto& yp : raw[x][a]) {
                detail::require(yp.size() == 2, where + ": context " + std::to_string(x) +
                                                    ", action " + std::to_string(a) +
                                                    ": atoms must be [y, p]");
                atoms.push_back({yp[0], yp[1]});
            }
            rewards[x].push_back(std::move(atoms));
        }
    }
    try {
        return Environment(probs, std::move(rewards), K, support);
    } catch (const ValidationError& e) {
        throw ValidationError(where + ": " + e.what());
    }
}

inline ojson to_json(const Environment& env) {
    ojson j;
    j["schema_version"] = kSchemaVersion;
    j["K"] = env.num_actions();
    j["D"] = env.support().upper();
    j["context_probs"] = env.context_probs();
    ojson rewards = ojson::array();
    for (const auto& per_ctx : env.rewards()) {
        ojson c = ojson::array();
        for (const auto& atoms : per_ctx) {
            ojson a = ojson::array();
            for (const auto& at : atoms) a.push_back({at.y, at.p});
            c.push_back(a);
        }
        rewards.push_back(c);
    }
    j["rewards"] = rewards;
    return j;
}

inline BehaviorSpec behavior_from_json(const json& j, const std::string& where = "behavior") {
    check_keys(j, {"schema_version", "propensities"}, where);
    try {
        return BehaviorSpec(get_field<std::vector<std::vector<double>>>(j, "propensities", where));
    } catch (const ValidationError& e) {
        throw ValidationError(where + ": " + e.what());
    }
}

inline ojson to_json(const BehaviorSpec& b) {
    ojson j;
    j["schema_version"] = kSchemaVersion;
    j["propensities"] = b.propensities();
    return j;
}

// ---------------------------------------------------------------- policies / model

inline Policy policy_from_json(const json& j, const std::string& where = "policy") {
    if (j.is_array()) return Policy(j.get<std::vector<ActionId>>());
    check_keys(j, {"schema_version", "table"}, where);
    return Policy(get_field<std::vector<ActionId>>(j, "table", where));
}

struct ClassFile {
    std::vector<Policy> policies;
    std::optional<int> natarajan_dim;
};

inline ClassFile class_from_json(const json& j, const std::string& where = "policy class") {
    check_keys(j, {"schema_version", "policies", "natarajan_dim"}, where);
    ClassFile c;
    for (const auto& t : get_field<std::vector<std::vector<ActionId>>>(j, "policies", where)) {
        c.policies.emplace_back(t);
    }
    detail::require(!c.policies.empty(), where + ": no policies");
    if (j.contains("natarajan_dim") && !j.at("natarajan_dim").is_null()) {
        c.natarajan_dim = get_field<int>(j, "natarajan_dim", where);
    }
    return c;
}

inline TabularCdfModel model_from_json(const json& j, const std::string& where = "model") {
    check_keys(j, {"schema_version", "cdfs"}, where);
    detail::require(j.contains("cdfs") && j.at("cdfs").is_array(), where + ": 'cdfs' must be an array");
    std::vector<std::vector<StepFn>> cdfs;
    for (std::size_t x = 0; x < j.at("cdfs").size(); ++x) {
        const auto& row = j.at("cdfs")[x];
        detail::require(row.is_array(), where + ": cdfs[" + std::to_string(x) + "] must be an array");
        std::vector<StepFn> per;
        for (std::size_t a = 0; a < row.size(); ++a) {
            per.push_back(step_fn_from_json(row[a], where + ".cdfs[" + std::to_string(x) + "][" +
                                                       std::to_string(a) + "]"));
        }
        cdfs.push_back(std::move(per));
    }
    try {
        return TabularCdfModel(std::move(cdfs));
    } catch (const ValidationError& e) {
        throw ValidationError(where + ": " + e.what());
    }
}

// ---------------------------------------------------------------- reports

inline ojson to_json(const Diagnostics& d) {
    ojson j;
    j["n"] = d.n;
    j["informative_count"] = d.informative_count();
    j["sigma"] = d.sigma;
    j["sigma_prime"] = d.sigma_prime;
    j["r"] = d.r;
    j["beta_min"] = d.beta_min ? ojson(*d.beta_min) : ojson(nullptr);
    j["w_bar"] = d.w_bar ? ojson(*d.w_bar) : ojson(nullptr);
    return j;
}

inline ojson to_json(const LearnResult& r) {
    ojson j;
    j["schema_version"] = kSchemaVersion;
    j["selected"] = r.selected;
    j["tie"] = r.tie;
    j["greedy"] = r.greedy;
    j["risk"] = r.risk;
    j["config"] = to_json(r.config);
    j["lipschitz"] = r.lipschitz;
    j["lipschitz_overridden"] = r.lipschitz_overridden;
    j["natarajan_dim"] = r.natarajan_dim;
    ojson reports = ojson::array();
    for (const auto& p : r.reports) {
        ojson e;
        e["policy_index"] = p.policy_index;
        e["rho_hat"] = p.rho_hat;
        e["radius"] = p.radius.value;
        e["radius_deviation"] = p.radius.deviation;
        e["radius_bias"] = p.radius.bias;
        e["lcb"] = p.lcb;
        e["diagnostics"] = to_json(p.diagnostics);
        reports.push_back(e);
    }
    j["reports"] = reports;
    return j;
}

inline constexpr const char* kLearnCsvHeader = "policy_index,rho_hat,radius,lcb,r_pi,sigma_pi";

inline std::string learn_csv(const LearnResult& r) {
    std::ostringstream ss;
    ss << kLearnCsvHeader << '\n';
    for (const auto& p : r.reports) {
        ss << p.policy_index << ',' << fmt_num(p.rho_hat) << ',' << fmt_num(p.radius.value) << ','
           << fmt_num(p.lcb) << ',' << fmt_num(p.diagnostics.r) << ','
           << fmt_num(p.diagnostics.sigma) << '\n';
    }
    return ss.str();
}

inline ojson to_json(const CoverageReport& c) {
    ojson j;
    j["schema_version"] = kSchemaVersion;
    j["mode"] = c.mode;
    j["estimator"] = c.estimator;
    j["flavor"] = c.flavor;
    j["delta"] = c.delta;
    j["n"] = c.n;
    j["trials"] = c.trials;
    j["seed"] = c.seed;
    j["violations"] = c.violations;
    j["violation_rate"] = c.violation_rate;
    j["threshold"] = c.threshold;
    j["ci_low"] = c.ci_low;
    j["ci_high"] = c.ci_high;
    j["mean_max_error"] = c.mean_max_error;
    j["mean_radius"] = c.mean_radius;
    return j;
}

inline constexpr const char* kCoverageCsvHeader =
    "mode,estimator,flavor,delta,n,trials,violations,violation_rate,threshold,ci_low,ci_high";

inline std::string coverage_csv_row(const CoverageReport& c) {
    std::ostringstream ss;
    ss << c.mode << ',' << c.estimator << ',' << c.flavor << ',' << fmt_num(c.delta) << ',' << c.n
       << ',' << c.trials << ',' << c.violations << ',' << fmt_num(c.violation_rate) << ','
       << fmt_num(c.threshold) << ',' << fmt_num(c.ci_low) << ',' << fmt_num(c.ci_high) << '\n';
    return ss.str();
}

inline ojson to_json(const RateReport& r) {
    ojson j;
    j["schema_version"] = kSchemaVersion;
    j["risk"] = r.risk;
    j["estimator"] = r.estimator;
    j["delta"] = r.delta;
    j["trials_per_n"] = r.trials_per_n;
    j["seed"] = r.seed;
    j["lipschitz"] = r.lipschitz;
    j["slope"] = r.slope;
    j["slope_se"] = r.slope_se;
    j["slope_ci95"] = {r.slope - 1.96 * r.slope_se, r.slope + 1.96 * r.slope_se};
    j["slope_points"] = r.slope_points;
    j["c0"] = r.c0;
    j["certified_c"] = r.certified_c;
    j["fitted_c"] = r.fitted_c;
    j["below_certified_envelope"] = r.below_certified_envelope;
    ojson pts = ojson::array();
    for (const auto& p : r.points) {
        ojson e;
        e["n"] = p.n;
        e["delta_gap"] = p.delta_gap;
        e["mean_gap"] = p.mean_gap;
        e["se"] = p.se;
        e["mean_w1"] = p.mean_w1;
        e["violation_rate"] = p.violation_rate;
        e["certificate_exceptions"] = p.certificate_exceptions;
        e["envelope"] = p.envelope;
        e["envelope_precondition"] = p.envelope_precondition;
        pts.push_back(e);
    }
    j["points"] = pts;
    return j;
}

inline constexpr const char* kRateCsvHeader = "n,mean_gap,se,mean_w1,violation_rate";

inline std::string rate_csv(const RateReport& r) {
    std::ostringstream ss;
    ss << kRateCsvHeader << '\n';
    for (const auto& p : r.points) {
        ss << p.n << ',' << fmt_num(p.mean_gap) << ',' << fmt_num(p.se) << ',' << fmt_num(p.mean_w1)
           << ',' << fmt_num(p.violation_rate) << '\n';
    }
    return ss.str();
}

} // namespace riskpess::io
