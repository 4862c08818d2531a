#include "uotflow/datasets.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "uotflow/ioutil.hpp"

namespace uotflow::datasets {

void GmmSpec::validate() const {
    if (modes.empty() || modes.size() != weights.size())
        throw std::invalid_argument("GmmSpec: modes/weights size mismatch or empty");
    double sum = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        if (!(weights[k] > 0.0)) throw std::invalid_argument("GmmSpec: weights must be positive");
        if (k > 0 && weights[k] > weights[k - 1] + 1e-12)
            throw std::invalid_argument("GmmSpec: weights must be non-increasing");
        sum += weights[k];
        if (modes[k].mean.size() != d) throw std::invalid_argument("GmmSpec: mean dim mismatch");
        if (!(modes[k].sigma > 0.0)) throw std::invalid_argument("GmmSpec: sigma must be positive");
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("GmmSpec: weights must sum to 1");
}

std::vector<double> longtailed_weights(std::size_t m, double imbalance) {
    if (m < 1) throw std::invalid_argument("longtailed_weights: m must be >= 1");
    if (!(imbalance > 0.0) || imbalance > 1.0)
        throw std::invalid_argument("longtailed_weights: imbalance must be in (0, 1]");
    if (m == 1) return {1.0};
    std::vector<double> w(m);
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        w[i] = std::pow(imbalance, static_cast<double>(i) / static_cast<double>(m - 1));
        sum += w[i];
    }
    for (double& x : w) x /= sum;
    return w;
}

std::vector<LabeledSample> sample_gmm(const GmmSpec& spec, std::size_t n, RngState& rng) {
    spec.validate();
    std::vector<LabeledSample> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t k = rng.categorical(spec.weights);
        out[i].label = k;
        out[i].x.resize(spec.d);
        for (std::size_t j = 0; j < spec.d; ++j)
            out[i].x[j] = spec.modes[k].mean[j] + spec.modes[k].sigma * rng.normal();
    }
    return out;
}

LabeledData sample_gmm_mat(const GmmSpec& spec, std::size_t n, RngState& rng) {
    auto samples = sample_gmm(spec, n, rng);
    LabeledData data;
    data.x = Mat(n, spec.d);
    data.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        data.labels[i] = samples[i].label;
        for (std::size_t j = 0; j < spec.d; ++j) data.x(i, j) = samples[i].x[j];
    }
    return data;
}

std::size_t proxy_label(const double* x, const GmmSpec& spec) {
    // log posterior up to a constant: log w_k - d log sigma_k - |x-mu|^2/(2 sigma_k^2)
    std::size_t best = 0;
    double best_lp = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < spec.modes.size(); ++k) {
        const Mode& m = spec.modes[k];
        double sq = 0.0;
        for (std::size_t j = 0; j < spec.d; ++j) {
            double dj = x[j] - m.mean[j];
            sq += dj * dj;
        }
        double lp = std::log(spec.weights[k]) - static_cast<double>(spec.d) * std::log(m.sigma) -
                    sq / (2.0 * m.sigma * m.sigma);
        if (lp > best_lp) {
            best_lp = lp;
            best = k;
        }
    }
    return best;
}

std::vector<std::size_t> proxy_labels(const Mat& points, const GmmSpec& spec) {
    std::vector<std::size_t> out(points.rows);
    for (std::size_t i = 0; i < points.rows; ++i) out[i] = proxy_label(points.row_ptr(i), spec);
    return out;
}

Mat source_sample(std::size_t n, std::size_t d, RngState& rng) {
    return numkit::gaussian_sample(rng, n, d);
}

namespace {

// Peripheral long-tailed layouts: the head mode sits nearest the standard
// normal source and rarer modes sit progressively farther out, so tail
// samples incur high transport costs. All pairwise separations stay >= 8
// sigma so proxy labels are near-perfect.
GmmSpec radial_spec(std::size_t m, double imbalance, const std::vector<double>& radii,
                    double sigma) {
    GmmSpec spec;
    spec.d = 2;
    spec.weights = longtailed_weights(m, imbalance);
    for (std::size_t k = 0; k < m; ++k) {
        double ang = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(m);
        spec.modes.push_back({{radii[k] * std::cos(ang), radii[k] * std::sin(ang)}, sigma});
    }
    spec.validate();
    return spec;
}

}  // namespace

GmmSpec preset(const std::string& name) {
    if (name == "two_mode_0.1") {
        GmmSpec spec;
        spec.d = 2;
        spec.modes = {{{-2.0, 0.0}, 0.7}, {{4.3, 0.0}, 0.7}};
        spec.weights = {0.9, 0.1};
        spec.validate();
        return spec;
    }
    if (name == "five_mode_0.1")
        return radial_spec(5, 0.1, {0.0, 3.5, 5.0, 6.5, 8.0}, 0.3);
    if (name == "eight_mode_0.01")
        return radial_spec(8, 0.01, {0.0, 2.5, 3.5, 4.5, 5.5, 6.5, 7.5, 8.5}, 0.3);
    throw std::invalid_argument("unknown dataset preset: " + name);
}

bool is_preset(const std::string& name) {
    return name == "two_mode_0.1" || name == "five_mode_0.1" || name == "eight_mode_0.01";
}

void write_dataset_csv(std::ostream& os, const LabeledData& data) {
    for (std::size_t j = 0; j < data.x.cols; ++j) os << 'x' << (j + 1) << ',';
    os << "label\n";
    for (std::size_t i = 0; i < data.x.rows; ++i) {
        for (std::size_t j = 0; j < data.x.cols; ++j) os << ioutil::fmt(data.x(i, j)) << ',';
        os << data.labels[i] << '\n';
    }
}

LabeledData read_dataset_csv(const std::string& path) {
    auto rows = ioutil::read_csv(path);
    if (rows.size() < 2) throw std::runtime_error("dataset csv empty: " + path);
    std::size_t d = rows[0].size() - 1;
    LabeledData data;
    data.x = Mat(rows.size() - 1, d);
    data.labels.resize(rows.size() - 1);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != d + 1) throw std::runtime_error("dataset csv ragged row: " + path);
        for (std::size_t j = 0; j < d; ++j) data.x(i - 1, j) = std::stod(rows[i][j]);
        data.labels[i - 1] = std::stoul(rows[i][d]);
    }
    return data;
}

}  // namespace uotflow::datasets
