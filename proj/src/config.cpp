// SPDX-License-Identifier: Apache-2.0
#include "ofdmwave/config.hpp"

#include <fstream>
#include <set>

#include "ofdmwave/io.hpp"

namespace ofdmwave {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
    if (!j.is_object()) throw ConfigError("config: '" + where + "' must be an object");
    for (const auto& [key, _] : j.items())
        if (!allowed.count(key))
            throw ConfigError("config: unknown key '" + key + "' in '" + where + "'");
}

template <typename T>
T get_or(const json& j, const std::string& key, T def) {
    if (!j.contains(key)) return def;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config: bad type for key '" + key + "'");
    }
}

std::optional<double> get_opt(const json& j, const std::string& key) {
    if (!j.contains(key)) return std::nullopt;
    if (!j.at(key).is_number()) throw ConfigError("config: '" + key + "' must be a number");
    return j.at(key).get<double>();
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    check_keys(j, "<root>",
               {"grid", "channel", "baseline", "papr", "spectral", "train", "gen_channels",
                "seed", "out_dir", "threads"});
    ExperimentConfig c;
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        check_keys(g, "grid", {"n", "m", "delta_f_hz", "t_cp_fraction", "oversampling"});
        c.grid.n = get_or(g, "n", c.grid.n);
        c.grid.m = get_or(g, "m", c.grid.m);
        c.grid.delta_f_hz = get_or(g, "delta_f_hz", c.grid.delta_f_hz);
        c.grid.t_cp_fraction = get_or(g, "t_cp_fraction", c.grid.t_cp_fraction);
        c.grid.oversampling = get_or(g, "oversampling", c.grid.oversampling);
    }
    c.grid.validate();
    if (j.contains("channel")) {
        const auto& ch = j.at("channel");
        check_keys(ch, "channel", {"num_taps", "delay_spread_fraction", "power_decay"});
        c.channel.num_taps = get_or(ch, "num_taps", c.channel.num_taps);
        c.channel.delay_spread_fraction =
            get_or(ch, "delay_spread_fraction", c.channel.delay_spread_fraction);
        c.channel.power_decay = get_or(ch, "power_decay", c.channel.power_decay);
    }
    c.channel.validate();
    if (j.contains("baseline")) {
        const auto& b = j.at("baseline");
        check_keys(b, "baseline",
                   {"k", "r", "snr_db", "slots", "covariance_draws", "epsilon", "solver_profile"});
        c.baseline.k = get_or(b, "k", c.baseline.k);
        c.baseline.r = get_or(b, "r", c.baseline.r);
        c.baseline.snr_db = get_or(b, "snr_db", c.baseline.snr_db);
        c.baseline.slots = get_or(b, "slots", c.baseline.slots);
        c.baseline.covariance_draws = get_or(b, "covariance_draws", c.baseline.covariance_draws);
        c.baseline.epsilon = get_or(b, "epsilon", c.baseline.epsilon);
        c.baseline.solver_profile = get_or(b, "solver_profile", c.baseline.solver_profile);
        if (c.baseline.solver_profile != "fast" && c.baseline.solver_profile != "certified")
            throw ConfigError("config: baseline.solver_profile must be 'fast' or 'certified'");
    }
    if (j.contains("papr")) {
        const auto& p = j.at("papr");
        check_keys(p, "papr",
                   {"epsilon", "symbols", "mode", "params_file", "threshold_min_db",
                    "threshold_max_db", "threshold_step_db"});
        c.papr.epsilon = get_or(p, "epsilon", c.papr.epsilon);
        c.papr.symbols = get_or(p, "symbols", c.papr.symbols);
        c.papr.mode = get_or(p, "mode", c.papr.mode);
        c.papr.params_file = get_or(p, "params_file", c.papr.params_file);
        c.papr.threshold_min_db = get_or(p, "threshold_min_db", c.papr.threshold_min_db);
        c.papr.threshold_max_db = get_or(p, "threshold_max_db", c.papr.threshold_max_db);
        c.papr.threshold_step_db = get_or(p, "threshold_step_db", c.papr.threshold_step_db);
        if (c.papr.mode != "qam" && c.papr.mode != "tr" && c.papr.mode != "trained")
            throw ConfigError("config: papr.mode must be 'qam', 'tr' or 'trained'");
        if (c.papr.epsilon < 0.0 || c.papr.epsilon >= 1.0)
            throw ConfigError("config: papr.epsilon must be in [0, 1)");
    }
    if (j.contains("spectral")) {
        const auto& s = j.at("spectral");
        check_keys(s, "spectral", {"t_cp_fractions", "draws", "quadrature_tol"});
        c.spectral.t_cp_fractions = get_or(s, "t_cp_fractions", c.spectral.t_cp_fractions);
        c.spectral.draws = get_or(s, "draws", c.spectral.draws);
        c.spectral.quadrature_tol = get_or(s, "quadrature_tol", c.spectral.quadrature_tol);
    }
    if (j.contains("train")) {
        const auto& t = j.at("train");
        check_keys(t, "train",
                   {"gamma_peak_db", "gamma_peak_offset_db", "beta_leak_db", "beta_leak_offset_db",
                    "batch_size", "sgd_steps", "learning_rate", "lr_decay_start",
                    "outer_iterations", "tau", "snr_db", "fd_step", "covariance_draws", "k"});
        c.train.gamma_peak_db = get_opt(t, "gamma_peak_db");
        c.train.gamma_peak_offset_db = get_opt(t, "gamma_peak_offset_db");
        c.train.beta_leak_db = get_opt(t, "beta_leak_db");
        c.train.beta_leak_offset_db = get_opt(t, "beta_leak_offset_db");
        c.train.batch_size = get_or(t, "batch_size", c.train.batch_size);
        c.train.sgd_steps = get_or(t, "sgd_steps", c.train.sgd_steps);
        c.train.learning_rate = get_or(t, "learning_rate", c.train.learning_rate);
        c.train.lr_decay_start = get_or(t, "lr_decay_start", c.train.lr_decay_start);
        c.train.outer_iterations = get_or(t, "outer_iterations", c.train.outer_iterations);
        c.train.tau = get_or(t, "tau", c.train.tau);
        c.train.snr_db = get_or(t, "snr_db", c.train.snr_db);
        c.train.fd_step = get_or(t, "fd_step", c.train.fd_step);
        c.train.covariance_draws = get_or(t, "covariance_draws", c.train.covariance_draws);
        c.train.k = get_or(t, "k", c.train.k);
        if (c.train.gamma_peak_db && c.train.gamma_peak_offset_db)
            throw ConfigError("config: give either gamma_peak_db or gamma_peak_offset_db");
        if (c.train.beta_leak_db && c.train.beta_leak_offset_db)
            throw ConfigError("config: give either beta_leak_db or beta_leak_offset_db");
    }
    if (j.contains("gen_channels")) {
        const auto& g = j.at("gen_channels");
        check_keys(g, "gen_channels", {"count", "out"});
        c.gen_channels.count = get_or(g, "count", c.gen_channels.count);
        c.gen_channels.out = get_or(g, "out", c.gen_channels.out);
    }
    c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
    c.out_dir = get_or(j, "out_dir", c.out_dir);
    c.threads = get_or(j, "threads", c.threads);
    return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config: " + path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config: invalid JSON in " + path + ": " + e.what());
    }
    return from_json(j);
}

nlohmann::json ExperimentConfig::resolved_json() const {
    json j;
    j["grid"] = {{"n", grid.n},
                 {"m", grid.m},
                 {"delta_f_hz", grid.delta_f_hz},
                 {"t_cp_fraction", grid.t_cp_fraction},
                 {"oversampling", grid.oversampling}};
    j["channel"] = {{"num_taps", channel.num_taps},
                    {"delay_spread_fraction", channel.delay_spread_fraction},
                    {"power_decay", channel.power_decay}};
    j["baseline"] = {{"k", baseline.k},
                     {"r", baseline.r},
                     {"snr_db", baseline.snr_db},
                     {"slots", baseline.slots},
                     {"covariance_draws", baseline.covariance_draws},
                     {"epsilon", baseline.epsilon},
                     {"solver_profile", baseline.solver_profile}};
    j["papr"] = {{"epsilon", papr.epsilon},
                 {"symbols", papr.symbols},
                 {"mode", papr.mode},
                 {"params_file", papr.params_file},
                 {"threshold_min_db", papr.threshold_min_db},
                 {"threshold_max_db", papr.threshold_max_db},
                 {"threshold_step_db", papr.threshold_step_db}};
    j["spectral"] = {{"t_cp_fractions", spectral.t_cp_fractions},
                     {"draws", spectral.draws},
                     {"quadrature_tol", spectral.quadrature_tol}};
    json t = {{"batch_size", train.batch_size},
              {"sgd_steps", train.sgd_steps},
              {"learning_rate", train.learning_rate},
              {"lr_decay_start", train.lr_decay_start},
              {"outer_iterations", train.outer_iterations},
              {"tau", train.tau},
              {"snr_db", train.snr_db},
              {"fd_step", train.fd_step},
              {"covariance_draws", train.covariance_draws},
              {"k", train.k}};
    if (train.gamma_peak_db) t["gamma_peak_db"] = *train.gamma_peak_db;
    if (train.gamma_peak_offset_db) t["gamma_peak_offset_db"] = *train.gamma_peak_offset_db;
    if (train.beta_leak_db) t["beta_leak_db"] = *train.beta_leak_db;
    if (train.beta_leak_offset_db) t["beta_leak_offset_db"] = *train.beta_leak_offset_db;
    j["train"] = t;
    j["gen_channels"] = {{"count", gen_channels.count}, {"out", gen_channels.out}};
    j["seed"] = seed;
    j["out_dir"] = out_dir;
    j["threads"] = threads;
    return j;
}

std::string ExperimentConfig::config_hash() const {
    return hex64(fnv1a64_str(resolved_json().dump()));
}

}  // namespace ofdmwave
