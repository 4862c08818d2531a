#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "uotflow/datasets.hpp"
#include "uotflow/flowmatch.hpp"
#include "uotflow/ode.hpp"

// Strict-JSON experiment configuration; (config, seed) fully determines a
// run. Unknown keys anywhere are rejected.
namespace uotflow::config {

struct DatasetConfig {
    std::string preset;        // empty when spec given inline
    datasets::GmmSpec spec;    // resolved
    std::size_t n_train = 100000;
    std::size_t n_test = 10000;
};

struct EvalConfig {
    std::size_t n_gen = 5000;
    std::size_t n_real = 5000;
    std::size_t knn_k = 5;
    std::size_t n_nll = 256;   // NLL points, stratified over classes
    bool do_ncre = true;
    bool do_prf = true;
    bool do_bpd = true;
};

struct ExperimentConfig {
    int version = 1;
    DatasetConfig dataset;
    flowmatch::TrainConfig train;
    ode::SolverConfig solver;
    EvalConfig eval;
    std::string output_dir = "out";
    std::uint64_t seed = 0;
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& json_text);
std::string dump_config(const ExperimentConfig& cfg);  // canonical, hashable

void apply_overrides(ExperimentConfig& cfg, std::optional<std::uint64_t> seed,
                     const std::optional<std::string>& out_dir);

}  // namespace uotflow::config
