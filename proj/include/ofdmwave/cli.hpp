// SPDX-License-Identifier: Apache-2.0
#ifndef OFDMWAVE_CLI_HPP
#define OFDMWAVE_CLI_HPP

#include <string>

#include "ofdmwave/config.hpp"

namespace ofdmwave {

/// Exit codes: 0 ok, 2 config error, 3 numerical error, 4 I/O error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitIo = 4;

void cmd_spectral_sweep(const ExperimentConfig& cfg);
void cmd_papr_ccdf(const ExperimentConfig& cfg);
void cmd_tr_baseline(const ExperimentConfig& cfg);
void cmd_gen_channels(const ExperimentConfig& cfg);
void cmd_simulate_baseline(const ExperimentConfig& cfg, const std::string& llr_dump_path = "");
void cmd_train(const ExperimentConfig& cfg, const std::string& params_out,
               const std::string& trace_out);
void cmd_eval_trained(const ExperimentConfig& cfg, const std::string& params_file);

/// Trained-parameter file round trip (params.json).
void write_tx_params(const std::string& path, const TxParams& params,
                     const ExperimentConfig& cfg, double gamma_peak_db, double beta_leak_db);
TxParams read_tx_params(const std::string& path);

int run_cli(int argc, char** argv);

}  // namespace ofdmwave

#endif
