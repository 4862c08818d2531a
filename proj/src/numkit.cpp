#include "uotflow/numkit.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace uotflow::numkit {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMap = Eigen::Map<const EMat>;
using MMap = Eigen::Map<EMat>;
using CVec = Eigen::Map<const Eigen::VectorXd>;
using MVec = Eigen::Map<Eigen::VectorXd>;

bool Mat::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

Mat matmul(const Mat& a, const Mat& b) {
    if (a.cols != b.rows) throw std::invalid_argument("matmul: shape mismatch");
    Mat c(a.rows, b.cols);
    MMap(c.data.data(), c.rows, c.cols) =
        CMap(a.data.data(), a.rows, a.cols) * CMap(b.data.data(), b.rows, b.cols);
    return c;
}

Mat matmul_tn(const Mat& a, const Mat& b) {
    if (a.rows != b.rows) throw std::invalid_argument("matmul_tn: shape mismatch");
    Mat c(a.cols, b.cols);
    MMap(c.data.data(), c.rows, c.cols) =
        CMap(a.data.data(), a.rows, a.cols).transpose() * CMap(b.data.data(), b.rows, b.cols);
    return c;
}

Mat matmul_nt(const Mat& a, const Mat& b) {
    if (a.cols != b.cols) throw std::invalid_argument("matmul_nt: shape mismatch");
    Mat c(a.rows, b.rows);
    MMap(c.data.data(), c.rows, c.cols) =
        CMap(a.data.data(), a.rows, a.cols) * CMap(b.data.data(), b.rows, b.cols).transpose();
    return c;
}

std::vector<double> matvec(const Mat& a, const std::vector<double>& x) {
    if (a.cols != x.size()) throw std::invalid_argument("matvec: shape mismatch");
    std::vector<double> y(a.rows);
    MVec(y.data(), y.size()) = CMap(a.data.data(), a.rows, a.cols) * CVec(x.data(), x.size());
    return y;
}

std::vector<double> matvec_t(const Mat& a, const std::vector<double>& x) {
    if (a.rows != x.size()) throw std::invalid_argument("matvec_t: shape mismatch");
    std::vector<double> y(a.cols);
    MVec(y.data(), y.size()) =
        CMap(a.data.data(), a.rows, a.cols).transpose() * CVec(x.data(), x.size());
    return y;
}

std::vector<double> logsumexp_rows(const Mat& m) {
    if (m.rows == 0 || m.cols == 0) throw std::invalid_argument("logsumexp_rows: empty matrix");
    std::vector<double> out(m.rows);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* r = m.row_ptr(i);
        double mx = r[0];
        for (std::size_t j = 1; j < m.cols; ++j) mx = std::max(mx, r[j]);
        if (mx == -std::numeric_limits<double>::infinity()) {
            out[i] = mx;
            continue;
        }
        double s = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j) s += std::exp(r[j] - mx);
        out[i] = mx + std::log(s);
    }
    return out;
}

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

RngState::RngState(std::uint64_t seed) : seed_(seed) {
    std::uint64_t sm = seed;
    for (auto& s : s_) s = splitmix64(sm);
}

RngState RngState::fork(std::string_view label) { return fork(fnv1a(label)); }

RngState RngState::fork(std::uint64_t label) {
    std::uint64_t mix = seed_ ^ rotl(label, 17) ^ (0xd1342543de82ef95ULL * ++fork_count_);
    std::uint64_t sm = mix;
    return RngState(splitmix64(sm));
}

std::uint64_t RngState::next_u64() {
    std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double RngState::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngState::normal() {
    if (has_cached_normal_) {
        has_cached_normal_ = false;
        return cached_normal_;
    }
    // Box-Muller; u1 kept strictly positive.
    double u1 = 0.0;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    cached_normal_ = r * std::sin(a);
    has_cached_normal_ = true;
    return r * std::cos(a);
}

std::size_t RngState::categorical(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw std::invalid_argument("categorical: negative weight");
        total += w;
    }
    if (total <= 0.0) throw std::invalid_argument("categorical: zero total weight");
    double u = uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (u < acc) return i;
    }
    return weights.size() - 1;
}

Mat gaussian_sample(RngState& rng, std::size_t n, std::size_t d) {
    if (n < 1 || d < 1) throw std::invalid_argument("gaussian_sample: n, d must be >= 1");
    Mat m(n, d);
    for (double& v : m.data) v = rng.normal();
    return m;
}

}  // namespace uotflow::numkit
