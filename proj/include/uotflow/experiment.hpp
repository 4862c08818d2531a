#pragma once

#include <string>
#include <vector>

#include "uotflow/config.hpp"
#include "uotflow/metrics.hpp"

// Command implementations shared by the CLI and the acceptance harness.
// Every command writes its artifacts plus a manifest.json into out_dir.
namespace uotflow::experiment {

struct EvalSummary {
    metrics::NcreReport ncre;
    metrics::PrfReport prf;
    metrics::ClasswiseBpd bpd;
    metrics::ClassHistogram hist;
};

void cmd_gen_data(const config::ExperimentConfig& cfg, const std::string& out_dir);

// Trains and writes checkpoint.txt + train_log.csv; returns checkpoint path.
std::string cmd_train(const config::ExperimentConfig& cfg, const std::string& out_dir);

// Samples n_gen points from the checkpoint; writes samples.csv (with proxy
// labels) and returns the points.
numkit::Mat cmd_sample(const config::ExperimentConfig& cfg, const std::string& checkpoint,
                       const std::string& out_dir);

EvalSummary cmd_eval(const config::ExperimentConfig& cfg, const std::string& checkpoint,
                     const std::string& out_dir);

// One row per (tau, k) cell; failed cells are recorded and the sweep
// continues. Writes sweep.csv.
void cmd_sweep(const config::ExperimentConfig& cfg, const std::vector<double>& taus,
               const std::vector<double>& ks, const std::string& out_dir);

// Reads the CSV artifacts under in_dir and emits deterministic SVGs.
void cmd_plot(const config::ExperimentConfig& cfg, const std::string& in_dir,
              const std::string& out_dir);

}  // namespace uotflow::experiment
