// SPDX-License-Identifier: Apache-2.0
#ifndef OFDMWAVE_CONFIG_HPP
#define OFDMWAVE_CONFIG_HPP

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ofdmwave/channel.hpp"
#include "ofdmwave/grid.hpp"
#include "ofdmwave/train.hpp"

namespace ofdmwave {

struct BaselineParams {
    int k = 2;
    int r = 6;
    std::vector<double> snr_db = {0.0, 5.0, 10.0, 15.0, 20.0};
    int slots = 200;
    int covariance_draws = 5000;
    double epsilon = 1e-3;
    std::string solver_profile = "fast";  // "fast" | "certified"
};

struct PaprParams {
    double epsilon = 1e-3;
    int symbols = 20000;
    std::string mode = "qam";  // "qam" | "tr" | "trained"
    std::string params_file;
    double threshold_min_db = 0.0;
    double threshold_max_db = 13.0;
    double threshold_step_db = 0.25;
};

struct SpectralParams {
    std::vector<double> t_cp_fractions = {0.0, 0.025, 0.05, 0.075, 0.1};
    int draws = 100000;
    double quadrature_tol = 1e-9;
};

struct TrainParams {
    std::optional<double> gamma_peak_db;
    std::optional<double> gamma_peak_offset_db;  // relative to the QAM init PAPR_0
    std::optional<double> beta_leak_db;
    std::optional<double> beta_leak_offset_db;   // relative to the QAM init ACLR
    int batch_size = 128;
    int sgd_steps = 8;
    double learning_rate = 0.05;
    int lr_decay_start = 25;
    int outer_iterations = 50;
    double tau = 0.05;
    double snr_db = 10.0;
    double fd_step = 1e-4;
    int covariance_draws = 5000;
    int k = 2;
};

struct GenChannelsParams {
    int count = 10000;
    std::string out = "channels.chnl";
};

/// Strict-schema experiment configuration: unknown keys are rejected, every
/// run writes the resolved copy (defaults filled in) next to its outputs.
struct ExperimentConfig {
    GridConfig grid;
    TdlProfile channel;
    BaselineParams baseline;
    PaprParams papr;
    SpectralParams spectral;
    TrainParams train;
    GenChannelsParams gen_channels;
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    int threads = 0;  // 0 = hardware concurrency

    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig from_file(const std::string& path);

    nlohmann::json resolved_json() const;
    std::string config_hash() const;
};

}  // namespace ofdmwave

#endif
