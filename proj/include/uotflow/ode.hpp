#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "uotflow/model.hpp"
#include "uotflow/numkit.hpp"

// ODE integration of the learned field: sampling (0 -> 1) and exact-trace
// likelihood (1 -> 0 with divergence accumulation).
namespace uotflow::ode {

using numkit::Mat;
using numkit::RngState;

enum class Method { euler, rk4, adaptive_rk45 };

Method parse_method(const std::string& name);
std::string method_name(Method m);

struct SolverConfig {
    Method method = Method::adaptive_rk45;
    std::size_t n_steps = 100;   // fixed-step methods
    double atol = 1e-6;
    double rtol = 1e-6;
    std::size_t max_steps = 100000;

    void validate() const;
};

struct NllReport {
    double logp1 = 0.0;
    double bpd = 0.0;                 // -logp1 / (ln 2 * d)
    double divergence_integral = 0.0; // int_0^1 div v dt along the path
    std::size_t steps_used = 0;
};

std::vector<double> integrate(const model::MlpVectorField& net, const std::vector<double>& x_start,
                              double t0, double t1, const SolverConfig& cfg);

// All rows advance together; the adaptive error norm is taken across the
// whole batch so results stay deterministic regardless of batch splits.
Mat integrate_batch(const model::MlpVectorField& net, const Mat& x_start, double t0, double t1,
                    const SolverConfig& cfg);

// x0 ~ N(0, I), integrated 0 -> 1.
Mat sample_model(const model::MlpVectorField& net, std::size_t n, const SolverConfig& cfg,
                 RngState& rng);

NllReport nll(const model::MlpVectorField& net, const std::vector<double>& x1,
              const SolverConfig& cfg);
std::vector<NllReport> nll_batch(const model::MlpVectorField& net, const Mat& x1,
                                 const SolverConfig& cfg);

}  // namespace uotflow::ode
