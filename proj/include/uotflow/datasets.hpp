#pragma once

#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include "uotflow/numkit.hpp"

// Long-tailed Gaussian-mixture benchmarks with exact-posterior proxy labels.
namespace uotflow::datasets {

using numkit::Mat;
using numkit::RngState;

struct Mode {
    std::vector<double> mean;
    double sigma = 1.0;  // isotropic, covariance sigma^2 * I
};

struct GmmSpec {
    std::vector<Mode> modes;
    std::vector<double> weights;  // non-increasing, strictly positive, sums to 1
    std::size_t d = 2;

    void validate() const;
};

struct LabeledSample {
    std::vector<double> x;
    std::size_t label = 0;
};

struct LabeledData {
    Mat x;                           // n x d
    std::vector<std::size_t> labels; // length n
};

// w_i proportional to imbalance^(i/(m-1)), normalized; m=1 gives [1].
std::vector<double> longtailed_weights(std::size_t m, double imbalance);

std::vector<LabeledSample> sample_gmm(const GmmSpec& spec, std::size_t n, RngState& rng);
LabeledData sample_gmm_mat(const GmmSpec& spec, std::size_t n, RngState& rng);

// Argmax of the mixture posterior w_k * N(x; mean_k, sigma_k^2 I), ties to
// the lowest index.
std::size_t proxy_label(const double* x, const GmmSpec& spec);
std::vector<std::size_t> proxy_labels(const Mat& points, const GmmSpec& spec);

// Standard-normal source batch, delegating to numkit::gaussian_sample.
Mat source_sample(std::size_t n, std::size_t d, RngState& rng);

// Named benchmark geometries: "two_mode_0.1", "five_mode_0.1",
// "eight_mode_0.01". Throws on unknown names.
GmmSpec preset(const std::string& name);
bool is_preset(const std::string& name);

// CSV schema: x1..x_d,label.
void write_dataset_csv(std::ostream& os, const LabeledData& data);
LabeledData read_dataset_csv(const std::string& path);

}  // namespace uotflow::datasets
