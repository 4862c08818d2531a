#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "uotflow/model.hpp"
#include "uotflow/numkit.hpp"
#include "uotflow/transport.hpp"

// Conditional path sampling, the four coupling-method losses, and the
// training loop.
namespace uotflow::flowmatch {

using numkit::Mat;
using numkit::RngState;

enum class Coupling { independent, ot, uot_cfm, uot_rfm };

Coupling parse_coupling(const std::string& name);
std::string coupling_name(Coupling c);

struct TrainConfig {
    Coupling coupling = Coupling::uot_rfm;
    double k = 1.0;        // correction order; forced 0 unless uot_rfm
    double sigma = 0.05;   // path bandwidth
    std::size_t batch_size = 256;
    std::size_t iterations = 20000;
    transport::UotConfig uot;
    double lr = 2e-4;
    std::size_t warmup = 500;
    double clip = 1.0;
    double score_clamp = 1e-3;
    bool renormalize_weights = false;  // ablation flag, defaults off
    std::vector<std::size_t> hidden = {128, 128, 128};

    void validate() const;
    double effective_k() const { return coupling == Coupling::uot_rfm ? k : 0.0; }
};

struct PathSample {
    double t = 0.0;
    std::vector<double> x_t;
    std::vector<double> u_target;  // x1 - x0
};

struct LossReport {
    double weighted_loss = 0.0;
    double unweighted_loss = 0.0;
    double mean_weight = 1.0;
    double min_score = 1.0;
    double max_score = 1.0;
};

struct StepLog {
    std::size_t step = 0;
    LossReport loss;
    std::size_t sinkhorn_iters = 0;
    bool sinkhorn_converged = true;
    double mean_raw_score = 1.0;
    double clamped_fraction = 0.0;
};

struct TrainResult {
    model::MlpVectorField net;
    std::vector<StepLog> log;
};

PathSample sample_path(const std::vector<double>& x0, const std::vector<double>& x1, double t,
                       double sigma, RngState& rng);

// w_j = max(s_j, clamp)^(-k).
std::vector<double> make_weights(const transport::MajorityScores& scores, double k, double clamp);

// weighted_loss = (1/B) sum_i w_i ||v(t_i, xt_i) - u_i||^2; gradients are
// accumulated into grad_flat (resized and zeroed). Non-finite loss is a
// hard error.
LossReport batch_loss(const model::MlpVectorField& net, const std::vector<double>& t,
                      const Mat& x_t, const Mat& u, const std::vector<double>& weights,
                      std::vector<double>& grad_flat);

// Training loop over the chosen coupling; data rows are target samples.
TrainResult train(const TrainConfig& cfg, const Mat& data, RngState& rng);

// CSV schema: step,weighted_loss,unweighted_loss,mean_weight,sinkhorn_iters,
// converged_flag,mean_raw_score,clamped_fraction.
void write_train_log_csv(std::ostream& os, const std::vector<StepLog>& log);

}  // namespace uotflow::flowmatch
