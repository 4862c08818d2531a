#pragma once

#include <cstdint>
#include <cstddef>
#include <string_view>
#include <vector>

// Minimal dense linear algebra and deterministic RNG shared by every module.
namespace uotflow::numkit {

struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // row-major

    Mat() = default;
    Mat(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    double* row_ptr(std::size_t i) { return data.data() + i * cols; }
    const double* row_ptr(std::size_t i) const { return data.data() + i * cols; }

    std::size_t size() const { return data.size(); }
    bool all_finite() const;
};

// C = A * B, C = A^T * B, C = A * B^T (dense, row-major).
Mat matmul(const Mat& a, const Mat& b);
Mat matmul_tn(const Mat& a, const Mat& b);
Mat matmul_nt(const Mat& a, const Mat& b);

// y = A * x and y = A^T * x.
std::vector<double> matvec(const Mat& a, const std::vector<double>& x);
std::vector<double> matvec_t(const Mat& a, const std::vector<double>& x);

// Per-row log sum exp with max-subtraction stabilization.
std::vector<double> logsumexp_rows(const Mat& m);

// xoshiro256++ stream with labeled deterministic forking. Single-owner:
// parallel call sites must fork their own streams first.
class RngState {
public:
    explicit RngState(std::uint64_t seed);

    // Child stream derived from (seed, label, fork counter); two forks from
    // the same parent always differ, even with identical labels.
    RngState fork(std::string_view label);
    RngState fork(std::uint64_t label);

    std::uint64_t next_u64();
    double uniform();          // [0, 1)
    double normal();           // standard normal, Box-Muller
    std::size_t categorical(const std::vector<double>& weights);  // unnormalized

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t s_[4];
    std::uint64_t seed_;
    std::uint64_t fork_count_ = 0;
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

// n x d matrix of iid standard normals.
Mat gaussian_sample(RngState& rng, std::size_t n, std::size_t d);

}  // namespace uotflow::numkit
