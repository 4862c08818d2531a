#include "uotflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "uotflow/ioutil.hpp"

namespace uotflow::metrics {

ClassHistogram class_histogram(const Mat& points, const datasets::GmmSpec& spec) {
    ClassHistogram h;
    h.counts.assign(spec.modes.size(), 0);
    h.total = points.rows;
    for (std::size_t i = 0; i < points.rows; ++i)
        ++h.counts[datasets::proxy_label(points.row_ptr(i), spec)];
    return h;
}

NcreReport ncre(const ClassHistogram& gen_hist, const std::vector<double>& data_weights) {
    const std::size_t m = data_weights.size();
    if (gen_hist.counts.size() != m) throw std::invalid_argument("ncre: class count mismatch");
    for (double w : data_weights)
        if (!(w > 0.0)) throw std::invalid_argument("ncre: zero data weight");
    double wsum = 0.0;
    for (double w : data_weights) wsum += w;
    NcreReport rep;
    rep.signed_ncre.resize(m);
    rep.abs_ncre.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        double r_gen = gen_hist.total > 0
                           ? static_cast<double>(gen_hist.counts[i]) /
                                 static_cast<double>(gen_hist.total)
                           : 0.0;
        double r_data = data_weights[i] / wsum;
        rep.signed_ncre[i] = (r_gen - r_data) / r_data;
        rep.abs_ncre[i] = std::abs(rep.signed_ncre[i]);
        rep.mean_abs += rep.abs_ncre[i] / static_cast<double>(m);
    }
    return rep;
}

namespace {

double sq_dist(const double* a, const double* b, std::size_t d) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        double t = a[j] - b[j];
        s += t * t;
    }
    return s;
}

// k-NN radius (squared) of each point within its own set, self excluded.
std::vector<double> knn_radii_sq(const Mat& pts, std::size_t k) {
    const std::size_t n = pts.rows;
    std::vector<double> radii(n);
    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t cnt = 0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) dist[cnt++] = sq_dist(pts.row_ptr(i), pts.row_ptr(j), pts.cols);
        std::nth_element(dist.begin(), dist.begin() + (k - 1), dist.begin() + cnt);
        radii[i] = dist[k - 1];
    }
    return radii;
}

// Fraction of query points inside the union of balls B(ref_i, radius_i).
double covered_fraction(const Mat& query, const Mat& ref, const std::vector<double>& radii_sq) {
    std::size_t hit = 0;
    for (std::size_t i = 0; i < query.rows; ++i) {
        for (std::size_t j = 0; j < ref.rows; ++j) {
            if (sq_dist(query.row_ptr(i), ref.row_ptr(j), query.cols) <= radii_sq[j]) {
                ++hit;
                break;
            }
        }
    }
    return static_cast<double>(hit) / static_cast<double>(query.rows);
}

}  // namespace

PrfReport knn_precision_recall(const Mat& real, const Mat& gen, std::size_t k) {
    if (real.rows == 0 || gen.rows == 0)
        throw std::invalid_argument("knn_precision_recall: empty set");
    if (real.cols != gen.cols) throw std::invalid_argument("knn_precision_recall: dim mismatch");
    if (k < 1 || k >= std::min(real.rows, gen.rows))
        throw std::invalid_argument("knn_precision_recall: k out of range");

    auto real_radii = knn_radii_sq(real, k);
    auto gen_radii = knn_radii_sq(gen, k);
    PrfReport rep;
    for (double r : real_radii)
        if (r == 0.0) rep.degenerate = true;
    for (double r : gen_radii)
        if (r == 0.0) rep.degenerate = true;
    rep.precision = covered_fraction(gen, real, real_radii);
    rep.recall = covered_fraction(real, gen, gen_radii);
    rep.f1 = rep.precision + rep.recall > 0.0
                 ? 2.0 * rep.precision * rep.recall / (rep.precision + rep.recall)
                 : 0.0;
    return rep;
}

ClasswiseBpd classwise_bpd(const model::MlpVectorField& net, const Mat& x,
                           const std::vector<std::size_t>& labels, std::size_t n_classes,
                           const ode::SolverConfig& solver) {
    if (labels.size() != x.rows) throw std::invalid_argument("classwise_bpd: label count");
    auto reports = ode::nll_batch(net, x, solver);
    ClasswiseBpd out;
    out.per_class_mean.assign(n_classes, 0.0);
    out.counts.assign(n_classes, 0);
    for (std::size_t i = 0; i < x.rows; ++i) {
        if (labels[i] >= n_classes) throw std::invalid_argument("classwise_bpd: label range");
        out.per_class_mean[labels[i]] += reports[i].bpd;
        ++out.counts[labels[i]];
        out.overall_mean += reports[i].bpd / static_cast<double>(x.rows);
    }
    for (std::size_t c = 0; c < n_classes; ++c)
        out.per_class_mean[c] = out.counts[c] > 0
                                    ? out.per_class_mean[c] / static_cast<double>(out.counts[c])
                                    : std::numeric_limits<double>::quiet_NaN();
    return out;
}

void write_histogram_csv(std::ostream& os, const ClassHistogram& hist) {
    os << "class,count,proportion\n";
    for (std::size_t c = 0; c < hist.counts.size(); ++c) {
        double p = hist.total > 0 ? static_cast<double>(hist.counts[c]) /
                                        static_cast<double>(hist.total)
                                  : 0.0;
        os << c << ',' << hist.counts[c] << ',' << ioutil::fmt(p) << '\n';
    }
}

void write_ncre_csv(std::ostream& os, const NcreReport& rep) {
    os << "class,signed_ncre,abs_ncre\n";
    for (std::size_t c = 0; c < rep.signed_ncre.size(); ++c)
        os << c << ',' << ioutil::fmt(rep.signed_ncre[c]) << ',' << ioutil::fmt(rep.abs_ncre[c])
           << '\n';
    os << "mean,," << ioutil::fmt(rep.mean_abs) << '\n';
}

void write_prf_csv(std::ostream& os, const PrfReport& rep) {
    os << "precision,recall,f1,degenerate\n";
    os << ioutil::fmt(rep.precision) << ',' << ioutil::fmt(rep.recall) << ','
       << ioutil::fmt(rep.f1) << ',' << (rep.degenerate ? 1 : 0) << '\n';
}

void write_bpd_csv(std::ostream& os, const ClasswiseBpd& rep) {
    os << "class,count,bpd\n";
    for (std::size_t c = 0; c < rep.per_class_mean.size(); ++c)
        os << c << ',' << rep.counts[c] << ',' << ioutil::fmt(rep.per_class_mean[c]) << '\n';
    os << "overall,," << ioutil::fmt(rep.overall_mean) << '\n';
}

}  // namespace uotflow::metrics
