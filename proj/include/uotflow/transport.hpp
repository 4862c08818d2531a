#pragma once

#include <cstddef>
#include <ostream>
#include <utility>
#include <vector>

#include "uotflow/numkit.hpp"

// Mini-batch balanced / unbalanced optimal transport with KL marginal
// relaxation, majority scores, pair sampling, and a dense conformance oracle.
namespace uotflow::transport {

using numkit::Mat;
using numkit::RngState;

struct CostMatrix {
    Mat c;  // c_ij = 1/2 ||x0_i - x1_j||^2
};

struct UotConfig {
    double eps = 0.05;        // entropic regularization
    double tau = 1.0;         // target-marginal KL penalty (tau2)
    bool source_fixed = true; // tau1 = infinity; otherwise tau1 = tau
    std::size_t max_iter = 10000;
    double tol = 1e-9;
    bool accelerate = true;   // geometric extrapolation of the g fixed point

    void validate() const;
};

struct TransportPlan {
    Mat pi;
    std::vector<double> row_marginal;
    std::vector<double> col_marginal;
    double total_mass = 0.0;
    bool converged = true;
    std::size_t iterations = 0;
};

struct SinkhornPotentials {
    std::vector<double> f;  // source, f_i = eps * ln u_i
    std::vector<double> g;  // target, g_j = eps * ln v_j
};

struct MajorityScores {
    std::vector<double> s;
};

CostMatrix cost_matrix(const Mat& x0, const Mat& x1);

// KL-unbalanced Sinkhorn, log-stabilized scalings with reference measure
// a (x) b. Non-convergence within max_iter is flagged on the plan; NaN in
// the iterates is a hard error.
std::pair<TransportPlan, SinkhornPotentials> sinkhorn_unbalanced(
    const CostMatrix& c, const std::vector<double>& a, const std::vector<double>& b,
    const UotConfig& cfg);

// <c,pi> + eps*KL(pi || a(x)b) + tau1*KL(pi_0 || a) + tau2*KL(pi_1 || b).
// The tau1 term is dropped when cfg.source_fixed (indicator, feasible plans
// carry zero penalty). Shared by solver tests and the oracle.
double uot_objective(const CostMatrix& c, const Mat& pi, const std::vector<double>& a,
                     const std::vector<double>& b, const UotConfig& cfg);

// Direct minimization of uot_objective over the dense plan by mirror descent
// with backtracking; tiny instances only (B <= 8 per side).
TransportPlan uot_oracle_dense(const CostMatrix& c, const std::vector<double>& a,
                               const std::vector<double>& b, const UotConfig& cfg);

// Exact balanced OT for uniform square marginals: (1/B) x permutation matrix
// via shortest augmenting paths on the assignment problem.
TransportPlan emd_exact(const CostMatrix& c, const std::vector<double>& a,
                        const std::vector<double>& b);

// s_j = B * col_marginal_j; requires a source-fixed plan with uniform a = 1/B.
MajorityScores majority_scores(const TransportPlan& plan);

// One target index per source row, drawn from the normalized row.
std::vector<std::pair<std::size_t, std::size_t>> sample_pairs_rowwise(
    const TransportPlan& plan, RngState& rng);

// n iid pairs from the plan normalized to a probability matrix.
std::vector<std::pair<std::size_t, std::size_t>> sample_pairs_joint(
    const TransportPlan& plan, std::size_t n, RngState& rng);

// CSV schemas: plans "i,j,mass", scores "j,score".
void write_plan_csv(std::ostream& os, const TransportPlan& plan);
void write_scores_csv(std::ostream& os, const MajorityScores& scores);

}  // namespace uotflow::transport
