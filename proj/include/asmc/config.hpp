#ifndef ASMC_CONFIG_HPP
#define ASMC_CONFIG_HPP

// Experiment configuration: a flat JSON object whose keys are checked against
// the defaults of the chosen experiment. Unknown keys and type mismatches are
// errors. The fully resolved object (defaults filled in) is what a CSV echoes.

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "asmc/errors.hpp"

namespace asmc {

using Json = nlohmann::json;

inline const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names = {"fig3_2d",          "sweep_n",          "sweep_mt",
                                                   "local_model_theorem", "constants_report", "baseline_compare"};
    return names;
}

namespace detail {

// Two-component anisotropic mixture in the plane, means -e1 and e1.
inline Json planar_mixture_defaults() {
    return {{"weights", {0.7, 0.3}},
            {"means", {{-1.0, 0.0}, {1.0, 0.0}}},
            {"variances", {{0.09, 0.04}, {0.02, 0.18}}},
            {"h_axis", 0},
            {"h_threshold", 0.0}};
}

inline Json asmc_run_defaults() {
    return {{"N", 10000},        {"M", 5},         {"steps_per_level", 500}, {"dt", 0.001},
            {"eta", 0.2},        {"eta1", 1.0},    {"init", "gaussian"},     {"init_scale", 1.0},
            {"replicates", 100}, {"seed", 20240601}};
}

inline Json merged(Json a, const Json& b) {
    for (auto it = b.begin(); it != b.end(); ++it) a[it.key()] = it.value();
    return a;
}

}  // namespace detail

// Defaults of every key an experiment accepts.
inline Json experiment_defaults(const std::string& name) {
    using detail::merged;
    const Json mix = detail::planar_mixture_defaults();
    const Json run = detail::asmc_run_defaults();
    if (name == "fig3_2d")
        return merged(merged(mix, run), {{"checkpoint_every", 50}, {"lmc", true}, {"quadrature_grid", 256}});
    if (name == "sweep_n") {
        Json j = merged(merged(mix, run), {{"n_values", {100, 1000, 10000}}, {"replicates", 50}});
        j.erase("N");
        return j;
    }
    if (name == "sweep_mt") {
        Json base = run;
        base.erase("M");
        base.erase("steps_per_level");
        return merged(base, {{"dim", 10},
                            {"weights", {0.2, 0.8}},
                            {"iso_variances", {1.0 / 16.0, 1.0 / 25.0}},
                            {"h_axis", 0},
                            {"h_threshold", 0.0},
                            {"N", 2000},
                            {"eta", 0.1},
                            {"budget", 1000},
                            {"m_values", {1, 2, 5, 10, 20, 50, 100, 200, 500, 1000}},
                            {"replicates", 20}});
    }
    if (name == "local_model_theorem")
        return {{"energies", {0.0, 0.5, 1.0, 0.0, 0.5, 1.0}},
                {"membership", {0, 0, 0, 1, 1, 1}},
                {"h_states", {0}},
                {"delta", 0.1},
                {"nu", 1.0},
                {"eta", 0.1},
                {"eta1", 1.0},
                {"chi_A", 1.0},
                {"chi_gamma", 1.0},
                {"runner", "occupancy"},
                {"N_override", 0},
                {"replicates", 200},
                {"seed", 20240601}};
    if (name == "constants_report")
        return {{"target", "double_well"},
                {"dim", 1},
                {"A", 1.0},
                {"B", 1.0},
                {"C", 0.0},
                {"energies", {0.0, 0.5, 1.0, 0.0, 0.5, 1.0}},
                {"membership", {0, 0, 0, 1, 1, 1}},
                {"weights", {0.7, 0.3}},
                {"means", {-1.0, 1.0}},
                {"variances", {0.09, 0.02}},
                {"split", 0.0},
                {"eta", 0.1},
                {"eta1", 1.0},
                {"nu", 1.0},
                {"delta", 0.1},
                {"chi_A", 1.0},
                {"chi_gamma", 1.0},
                {"grid_n", 512},
                {"sc_points", 32},
                {"separable_dims", {2, 10, 50}},
                {"separable_A", 1.0},
                {"alpha0", 0.5},
                {"k0", 2.0},
                {"alpha_b", 0.0},
                {"alpha_u", 0.0},
                {"seed", 20240601}};
    if (name == "baseline_compare")
        return merged(merged(mix, run), {{"replicates", 20},
                                         {"N", 2000},
                                         {"rejection_budget", 2000},
                                         {"burn_in_time", 5.0},
                                         {"burn_in_dt", 0.005}});
    throw ConfigError("unknown experiment '" + name + "'");
}

class ExperimentConfig {
public:
    // Resolves `user` against the defaults of `name`. A user "experiment" key,
    // if present, must equal `name`.
    static ExperimentConfig resolve(const std::string& name, const Json& user) {
        if (!user.is_object()) throw ConfigError("config must be a JSON object");
        Json values = experiment_defaults(name);
        for (auto it = user.begin(); it != user.end(); ++it) {
            const std::string& key = it.key();
            if (key == "experiment") {
                if (!it->is_string() || it->get<std::string>() != name)
                    throw ConfigError("config is for experiment '" + it->dump() + "', not '" + name + "'");
                continue;
            }
            if (!values.contains(key)) throw ConfigError("unknown config key '" + key + "' for " + name);
            check_type(key, values[key], *it);
            values[key] = *it;
        }
        ExperimentConfig c;
        c.name_ = name;
        c.values_ = std::move(values);
        c.values_["experiment"] = name;
        return c;
    }

    const std::string& name() const noexcept { return name_; }
    const Json& values() const noexcept { return values_; }

    template <class T>
    T get(const std::string& key) const {
        if (!values_.contains(key)) throw ConfigError("missing config key '" + key + "'");
        try {
            return values_.at(key).get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("config key '" + key + "' has the wrong type: " + e.what());
        }
    }

    std::uint64_t seed() const { return get<std::uint64_t>("seed"); }

    void set(const std::string& key, Json v) {
        if (!values_.contains(key)) throw ConfigError("unknown config key '" + key + "' for " + name_);
        check_type(key, values_[key], v);
        values_[key] = std::move(v);
    }
    bool has(const std::string& key) const { return values_.contains(key); }

    // Compact single-line JSON with sorted keys.
    std::string echo() const { return values_.dump(); }

private:
    static void check_type(const std::string& key, const Json& def, const Json& v) {
        auto fail = [&](const char* want) {
            throw ConfigError("config key '" + key + "' must be " + want + ", got " + v.dump());
        };
        if (def.is_boolean()) {
            if (!v.is_boolean()) fail("a boolean");
        } else if (def.is_number_integer()) {
            if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0))
                fail("a non-negative integer");
        } else if (def.is_number()) {
            if (!v.is_number()) fail("a number");
        } else if (def.is_string()) {
            if (!v.is_string()) fail("a string");
        } else if (def.is_array()) {
            if (!v.is_array()) fail("an array");
        }
    }

    std::string name_;
    Json values_;
};

// Reads a config from a JSON file, or from a CSV produced by this tool (the
// `# config {...}` line of its comment block).
inline Json read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    const std::string marker = "# config ";
    if (auto pos = text.find("\n" + marker); pos != std::string::npos) {
        const std::size_t start = pos + 1 + marker.size();
        const std::size_t end = text.find('\n', start);
        try {
            return Json::parse(text.substr(start, end == std::string::npos ? std::string::npos : end - start));
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("malformed config line in '" + path + "': " + e.what());
        }
    }
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
}

}  // namespace asmc

#endif  // ASMC_CONFIG_HPP
