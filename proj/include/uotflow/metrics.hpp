#pragma once

#include <cstddef>
#include <ostream>
#include <vector>

#include "uotflow/datasets.hpp"
#include "uotflow/numkit.hpp"
#include "uotflow/ode.hpp"

// Class-proportion, coverage, and likelihood metrics.
namespace uotflow::metrics {

using numkit::Mat;

struct ClassHistogram {
    std::vector<std::size_t> counts;
    std::size_t total = 0;
};

struct NcreReport {
    std::vector<double> signed_ncre;
    std::vector<double> abs_ncre;
    double mean_abs = 0.0;
};

struct PrfReport {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool degenerate = false;  // some k-NN radius was exactly zero
};

struct ClasswiseBpd {
    std::vector<double> per_class_mean;  // NaN for empty classes
    std::vector<std::size_t> counts;
    double overall_mean = 0.0;
};

ClassHistogram class_histogram(const Mat& points, const datasets::GmmSpec& spec);

// signed_i = (r_gen_i - r_data_i) / r_data_i.
NcreReport ncre(const ClassHistogram& gen_hist, const std::vector<double>& data_weights);

// Manifold precision/recall on raw coordinates via k-NN radii.
PrfReport knn_precision_recall(const Mat& real, const Mat& gen, std::size_t k);

ClasswiseBpd classwise_bpd(const model::MlpVectorField& net, const Mat& x,
                           const std::vector<std::size_t>& labels, std::size_t n_classes,
                           const ode::SolverConfig& solver);

// CSV schemas: "class,count,proportion" / "class,signed_ncre,abs_ncre" (+
// trailing mean row) / "precision,recall,f1,degenerate" / "class,count,bpd"
// (+ trailing overall row).
void write_histogram_csv(std::ostream& os, const ClassHistogram& hist);
void write_ncre_csv(std::ostream& os, const NcreReport& rep);
void write_prf_csv(std::ostream& os, const PrfReport& rep);
void write_bpd_csv(std::ostream& os, const ClasswiseBpd& rep);

}  // namespace uotflow::metrics
