#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <vector>

#include "uotflow/numkit.hpp"

// Small tanh MLP vector field v_theta(t, x) with hand-derived exact
// gradients, plus the Adam optimizer used by training.
namespace uotflow::model {

using numkit::Mat;
using numkit::RngState;

struct TimeEmbedding {
    std::size_t n_freq = 8;
    std::vector<double> freqs;  // geometric ladder

    TimeEmbedding() : TimeEmbedding(8, 1.0, 1000.0) {}
    TimeEmbedding(std::size_t n, double f_min, double f_max);

    std::size_t dim() const { return 2 * n_freq; }
    void embed(double t, double* out) const;  // [sin(f_k t), cos(f_k t)]
};

struct MlpVectorField {
    std::size_t d = 0;                  // data dim == output dim
    std::vector<std::size_t> hidden;    // hidden widths, tanh activations
    TimeEmbedding temb;
    std::vector<Mat> w;                 // w[l]: in_l x out_l
    std::vector<std::vector<double>> b; // b[l]: out_l

    std::size_t n_layers() const { return w.size(); }
    std::size_t n_params() const;
    std::vector<double> flatten() const;
    void unflatten(const std::vector<double>& flat);
};

// Fan-in uniform init, deterministic given the rng stream.
MlpVectorField init_mlp(std::size_t d, const std::vector<std::size_t>& hidden, RngState& rng);

// Per-layer activations kept for the backward pass. inputs: n x (d + temb
// dim); act[l]: post-tanh output of hidden layer l.
struct ForwardCache {
    Mat input;
    std::vector<Mat> act;
};

// Batched v_theta: x is n x d, t_i per row; out resized to n x d.
void forward_batch(const MlpVectorField& net, const std::vector<double>& t, const Mat& x,
                   Mat& out, ForwardCache* cache = nullptr);
std::vector<double> forward(const MlpVectorField& net, double t, const std::vector<double>& x);

// Gradients of sum_i <upstream_i, v_theta(t_i, x_i)>. grad_flat (if given)
// is accumulated into; input_grad (if given) receives n x d d/dx gradients.
void backward_batch(const MlpVectorField& net, const ForwardCache& cache, const Mat& upstream,
                    std::vector<double>* grad_flat, Mat* input_grad = nullptr);

// Exact d x d Jacobian dv/dx from d backward passes.
Mat jacobian_x(const MlpVectorField& net, double t, const std::vector<double>& x);

// Per-sample Jacobian traces for a whole batch (one forward + d backwards).
std::vector<double> jacobian_trace_batch(const MlpVectorField& net, const std::vector<double>& t,
                                         const Mat& x);

struct AdamState {
    double lr = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double clip_norm = 1.0;
    std::size_t warmup_steps = 500;
    std::size_t step = 0;
    std::vector<double> m, v;
};

// Global-norm clip, then Adam with lr scaled by min(1, step/warmup).
void adam_step(AdamState& state, std::vector<double>& params, std::vector<double>& grads);

// Text checkpoint: architecture header + shortest-round-trip parameter
// decimals; save/load round-trips bit-exactly.
void save_checkpoint(std::ostream& os, const MlpVectorField& net);
MlpVectorField load_checkpoint(std::istream& is);

}  // namespace uotflow::model
