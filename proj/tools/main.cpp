// SPDX-License-Identifier: Apache-2.0
#include "ofdmwave/cli.hpp"

int main(int argc, char** argv) { return ofdmwave::run_cli(argc, argv); }
