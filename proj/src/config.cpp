#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rmt_transfer/errors.hpp"
#include "rmt_transfer/harness.hpp"

namespace rmt {

using nlohmann::json;

namespace {

const std::map<std::string, std::set<std::string>>& allowed_keys() {
    static const std::map<std::string, std::set<std::string>> keys = {
        {"sweep-alpha",
         {"p", "n", "N", "norm_mu", "norm_perp", "beta", "gamma", "gamma_tilde", "mixing", "alpha_grid", "beta_grid",
          "trials", "test_points", "fixed_source"}},
        {"distribution",
         {"p", "n", "N", "norm_mu", "norm_perp", "beta", "gamma", "gamma_tilde", "mixing", "alpha_grid", "beta_grid",
          "trials", "test_points", "fixed_source", "bins"}},
        {"optimal-curve", {"p_list", "n", "N", "norm_mu", "norm_perp", "gamma", "gamma_tilde", "mixing", "beta_grid"}},
        {"real-data", {"source_path", "target_path", "n", "gamma", "gamma_tilde"}},
        {"multi-source",
         {"p", "n", "norm_mu", "norm_perp", "beta", "gamma", "mixing", "sources", "trials", "test_points"}},
        {"identity-suite", {"p", "n", "N", "norm_mu", "norm_perp", "beta", "gamma", "gamma_tilde", "mixing",
                            "delta_offset"}},
    };
    return keys;
}

const std::map<std::string, std::set<std::string>>& required_keys() {
    static const std::map<std::string, std::set<std::string>> keys = {
        {"sweep-alpha", {"p", "n", "N", "alpha_grid"}},
        {"distribution", {"p", "n", "N", "alpha_grid"}},
        {"optimal-curve", {"p_list", "beta_grid"}},
        {"real-data", {"source_path", "target_path", "n"}},
        {"multi-source", {"p", "n", "sources"}},
        {"identity-suite", {"p", "n", "N"}},
    };
    return keys;
}

double get_real(const json& j, const std::string& key) {
    if (!j.is_number()) throw ConfigError("'" + key + "' must be a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ConfigError("'" + key + "' must be finite");
    return v;
}

long long get_int(const json& j, const std::string& key) {
    if (!j.is_number_integer()) throw ConfigError("'" + key + "' must be an integer");
    return j.get<long long>();
}

int get_positive_int(const json& j, const std::string& key) {
    const long long v = get_int(j, key);
    if (v < 1 || v > 1'000'000'000) throw ConfigError("'" + key + "' must be a positive integer");
    return static_cast<int>(v);
}

std::string get_string(const json& j, const std::string& key) {
    if (!j.is_string()) throw ConfigError("'" + key + "' must be a string");
    return j.get<std::string>();
}

std::vector<double> get_grid(const json& j, const std::string& key) {
    std::vector<double> out;
    if (j.is_array()) {
        for (const auto& v : j) out.push_back(get_real(v, key));
    } else if (j.is_object()) {
        for (const auto& [k, v] : j.items())
            if (k != "min" && k != "max" && k != "step") throw ConfigError("unknown key '" + k + "' in '" + key + "'");
        if (!j.contains("min") || !j.contains("max") || !j.contains("step"))
            throw ConfigError("'" + key + "' needs min, max and step");
        const double lo = get_real(j["min"], key + ".min");
        const double hi = get_real(j["max"], key + ".max");
        const double step = get_real(j["step"], key + ".step");
        if (!(step > 0.0)) throw ConfigError("'" + key + "' step must be positive");
        if (hi < lo) throw ConfigError("'" + key + "' max is below min");
        const auto count = static_cast<long long>(std::floor((hi - lo) / step + 1e-9));
        if (count > 10'000'000) throw ConfigError("'" + key + "' has too many points");
        for (long long k = 0; k <= count; ++k) out.push_back(std::round((lo + static_cast<double>(k) * step) * 1e12) / 1e12);  // drop accumulation noise
    } else {
        throw ConfigError("'" + key + "' must be an array or a {min, max, step} object");
    }
    if (out.empty()) throw ConfigError("'" + key + "' is empty");
    return out;
}

MixingMode get_mixing(const json& j) {
    const std::string s = get_string(j, "mixing");
    if (s == "additive") return MixingMode::Additive;
    if (s == "spherical") return MixingMode::SphericalInterp;
    throw ConfigError("'mixing' must be \"additive\" or \"spherical\"");
}

SourceTask get_source(const json& j, const ExperimentConfig& c) {
    if (!j.is_object()) throw ConfigError("each entry of 'sources' must be an object");
    SourceTask s{c.beta, c.norm_mu, 2000, 1.0};
    for (const auto& [k, v] : j.items()) {
        if (k == "beta")
            s.beta = get_real(v, "sources.beta");
        else if (k == "norm_mu")
            s.norm_mu = get_real(v, "sources.norm_mu");
        else if (k == "N")
            s.N = get_positive_int(v, "sources.N");
        else if (k == "gamma_tilde")
            s.gamma_tilde = get_real(v, "sources.gamma_tilde");
        else
            throw ConfigError("unknown key '" + k + "' in a source entry");
    }
    if (!(s.norm_mu >= 0.0)) throw ConfigError("source norm_mu must be nonnegative");
    if (!(s.gamma_tilde > 0.0)) throw ConfigError("source gamma_tilde must be positive");
    return s;
}

}  // namespace

ProblemSpec ExperimentConfig::problem(double beta_value) const {
    return ProblemSpec::from_norms(p, n, N, norm_mu, norm_perp, beta_value, mixing, gamma, gamma_tilde);
}

int ExperimentConfig::test_size() const { return test_points > 0 ? test_points : std::max(10 * n, 10000); }

ExperimentConfig parse_config(const std::string& json_text, const std::string& kind_hint) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("configuration must be a JSON object");

    ExperimentConfig c;
    if (j.contains("kind")) {
        c.kind = get_string(j["kind"], "kind");
        if (!kind_hint.empty() && c.kind != kind_hint)
            throw ConfigError("config kind '" + c.kind + "' does not match subcommand '" + kind_hint + "'");
    } else {
        c.kind = kind_hint;
    }
    const auto allowed = allowed_keys().find(c.kind);
    if (allowed == allowed_keys().end()) throw ConfigError("unknown experiment kind '" + c.kind + "'");
    for (const auto& [k, v] : j.items()) {
        if (k == "kind" || k == "output" || k == "seeds" || k == "t3_variant") continue;
        if (!allowed->second.count(k)) throw ConfigError("unknown key '" + k + "' for kind '" + c.kind + "'");
    }
    for (const auto& k : required_keys().at(c.kind))
        if (!j.contains(k)) throw ConfigError("missing required key '" + k + "'");

    if (c.kind == "optimal-curve") {
        c.n = 200;
        c.N = 2000;
        c.mixing = MixingMode::SphericalInterp;
    }
    if (j.contains("p")) c.p = get_positive_int(j["p"], "p");
    if (j.contains("n")) c.n = get_positive_int(j["n"], "n");
    if (j.contains("N")) c.N = get_positive_int(j["N"], "N");
    if (j.contains("norm_mu")) c.norm_mu = get_real(j["norm_mu"], "norm_mu");
    if (j.contains("norm_perp")) c.norm_perp = get_real(j["norm_perp"], "norm_perp");
    if (j.contains("beta")) c.beta = get_real(j["beta"], "beta");
    if (j.contains("gamma")) c.gamma = get_real(j["gamma"], "gamma");
    if (j.contains("gamma_tilde")) c.gamma_tilde = get_real(j["gamma_tilde"], "gamma_tilde");
    if (j.contains("mixing")) c.mixing = get_mixing(j["mixing"]);
    if (j.contains("alpha_grid")) c.alphas = get_grid(j["alpha_grid"], "alpha_grid");
    if (j.contains("beta_grid")) c.betas = get_grid(j["beta_grid"], "beta_grid");
    if (c.betas.empty()) c.betas = {c.beta};
    if (j.contains("trials")) {
        const long long t = get_int(j["trials"], "trials");
        if (t < 1) throw ConfigError("'trials' must be at least 1");
        c.trials = static_cast<int>(t);
    }
    if (j.contains("seeds")) {
        if (!j["seeds"].is_array() || j["seeds"].empty()) throw ConfigError("'seeds' must be a nonempty array");
        c.seeds.clear();
        for (const auto& s : j["seeds"]) {
            if (!s.is_number_integer() || get_int(s, "seeds") < 0)
                throw ConfigError("'seeds' entries must be nonnegative integers");
            c.seeds.push_back(s.get<std::uint64_t>());
        }
    }
    if (j.contains("output")) c.output = get_string(j["output"], "output");
    if (j.contains("t3_variant")) {
        try {
            c.t3_variant = parse_t3_variant(get_string(j["t3_variant"], "t3_variant"));
        } catch (const DomainError& e) {
            throw ConfigError(e.what());
        }
    }
    if (j.contains("p_list")) {
        if (!j["p_list"].is_array() || j["p_list"].empty()) throw ConfigError("'p_list' must be a nonempty array");
        for (const auto& v : j["p_list"]) c.p_list.push_back(get_positive_int(v, "p_list"));
    }
    if (j.contains("source_path")) c.source_path = get_string(j["source_path"], "source_path");
    if (j.contains("target_path")) c.target_path = get_string(j["target_path"], "target_path");
    if (j.contains("sources")) {
        if (!j["sources"].is_array() || j["sources"].empty()) throw ConfigError("'sources' must be a nonempty array");
        for (const auto& s : j["sources"]) c.sources.push_back(get_source(s, c));
    }
    if (j.contains("bins")) c.bins = get_positive_int(j["bins"], "bins");
    if (j.contains("test_points")) c.test_points = get_positive_int(j["test_points"], "test_points");
    if (j.contains("delta_offset")) c.delta_offset = get_real(j["delta_offset"], "delta_offset");
    if (j.contains("fixed_source")) {
        if (!j["fixed_source"].is_boolean()) throw ConfigError("'fixed_source' must be a boolean");
        c.fixed_source = j["fixed_source"].get<bool>();
    }

    if (c.norm_mu < 0 || c.norm_perp < 0) throw ConfigError("mean norms must be nonnegative");
    if (!(c.gamma > 0) || !(c.gamma_tilde > 0)) throw ConfigError("ridge parameters must be positive");
    if (c.mixing == MixingMode::SphericalInterp)
        for (double b : c.betas)
            if (std::abs(b) > 1.0) throw ConfigError("spherical mixing needs |beta| <= 1");
    if ((c.kind == "sweep-alpha" || c.kind == "distribution" || c.kind == "identity-suite" ||
         c.kind == "multi-source") &&
        c.p < 2 && c.norm_mu > 0 && c.norm_perp > 0)
        throw ConfigError("two orthogonal nonzero means need p >= 2");
    if (c.kind == "multi-source" && c.p < static_cast<int>(c.sources.size()) + 1)
        throw ConfigError("multi-source experiments need p > number of sources");
    if (c.kind == "identity-suite" && c.p > 2000) throw ConfigError("identity suite is limited to p <= 2000");

    j.erase("output");
    c.canonical = j.dump();
    return c;
}

ExperimentConfig load_config(const std::string& path, const std::string& kind_hint) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    ExperimentConfig c = parse_config(ss.str(), kind_hint);
    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    auto resolve = [&base](std::string& p) {
        if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).lexically_normal().string();
    };
    resolve(c.source_path);
    resolve(c.target_path);
    return c;
}

}  // namespace rmt
