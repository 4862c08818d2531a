#include "uotflow/flowmatch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "uotflow/ioutil.hpp"

namespace uotflow::flowmatch {

Coupling parse_coupling(const std::string& name) {
    if (name == "independent") return Coupling::independent;
    if (name == "ot") return Coupling::ot;
    if (name == "uot_cfm") return Coupling::uot_cfm;
    if (name == "uot_rfm") return Coupling::uot_rfm;
    throw std::invalid_argument("unknown coupling: " + name);
}

std::string coupling_name(Coupling c) {
    switch (c) {
        case Coupling::independent: return "independent";
        case Coupling::ot: return "ot";
        case Coupling::uot_cfm: return "uot_cfm";
        case Coupling::uot_rfm: return "uot_rfm";
    }
    throw std::logic_error("coupling_name");
}

void TrainConfig::validate() const {
    if (k < 0.0) throw std::invalid_argument("TrainConfig: k must be >= 0");
    if (sigma < 0.0) throw std::invalid_argument("TrainConfig: sigma must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (!(score_clamp > 0.0)) throw std::invalid_argument("TrainConfig: score_clamp must be > 0");
    if (hidden.empty()) throw std::invalid_argument("TrainConfig: hidden widths empty");
    uot.validate();
}

PathSample sample_path(const std::vector<double>& x0, const std::vector<double>& x1, double t,
                       double sigma, RngState& rng) {
    if (x0.size() != x1.size()) throw std::invalid_argument("sample_path: dim mismatch");
    PathSample ps;
    ps.t = t;
    ps.x_t.resize(x0.size());
    ps.u_target.resize(x0.size());
    for (std::size_t j = 0; j < x0.size(); ++j) {
        double mu = t * x1[j] + (1.0 - t) * x0[j];
        ps.x_t[j] = mu + sigma * rng.normal();
        ps.u_target[j] = x1[j] - x0[j];
    }
    return ps;
}

std::vector<double> make_weights(const transport::MajorityScores& scores, double k, double clamp) {
    if (k < 0.0) throw std::invalid_argument("make_weights: k must be >= 0");
    std::vector<double> w(scores.s.size());
    for (std::size_t j = 0; j < w.size(); ++j) w[j] = std::pow(std::max(scores.s[j], clamp), -k);
    return w;
}

LossReport batch_loss(const model::MlpVectorField& net, const std::vector<double>& t,
                      const Mat& x_t, const Mat& u, const std::vector<double>& weights,
                      std::vector<double>& grad_flat) {
    const std::size_t n = x_t.rows;
    if (t.size() != n || u.rows != n || u.cols != x_t.cols || weights.size() != n)
        throw std::invalid_argument("batch_loss: shape mismatch");
    for (double w : weights)
        if (!(w > 0.0)) throw std::invalid_argument("batch_loss: weights must be positive");

    Mat v;
    model::ForwardCache cache;
    model::forward_batch(net, t, x_t, v, &cache);

    LossReport rep;
    rep.mean_weight = 0.0;
    Mat upstream(n, x_t.cols);
    const double inv_b = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        double sq = 0.0;
        for (std::size_t j = 0; j < x_t.cols; ++j) {
            double r = v(i, j) - u(i, j);
            sq += r * r;
            upstream(i, j) = 2.0 * weights[i] * inv_b * r;
        }
        rep.weighted_loss += weights[i] * sq * inv_b;
        rep.unweighted_loss += sq * inv_b;
        rep.mean_weight += weights[i] * inv_b;
    }
    if (!std::isfinite(rep.weighted_loss))
        throw std::runtime_error("batch_loss: non-finite loss (weighted=" +
                                 std::to_string(rep.weighted_loss) + ")");
    model::backward_batch(net, cache, upstream, &grad_flat);
    return rep;
}

TrainResult train(const TrainConfig& cfg, const Mat& data, RngState& rng) {
    cfg.validate();
    const std::size_t B = cfg.batch_size;
    const std::size_t d = data.cols;
    if (data.rows < B) throw std::invalid_argument("train: dataset smaller than batch");

    RngState init_rng = rng.fork("init");
    RngState loop_rng = rng.fork("loop");

    TrainResult result;
    result.net = model::init_mlp(d, cfg.hidden, init_rng);
    std::vector<double> params = result.net.flatten();

    model::AdamState opt;
    opt.lr = cfg.lr;
    opt.warmup_steps = cfg.warmup;
    opt.clip_norm = cfg.clip;

    const double k_eff = cfg.effective_k();
    const std::vector<double> uniform_a(B, 1.0 / static_cast<double>(B));
    std::vector<double> grad;
    result.log.reserve(cfg.iterations);

    for (std::size_t step = 0; step < cfg.iterations; ++step) {
        Mat x0 = numkit::gaussian_sample(loop_rng, B, d);
        Mat x1(B, d);
        for (std::size_t i = 0; i < B; ++i) {
            std::size_t idx = static_cast<std::size_t>(loop_rng.uniform() *
                                                       static_cast<double>(data.rows));
            idx = std::min(idx, data.rows - 1);
            for (std::size_t j = 0; j < d; ++j) x1(i, j) = data(idx, j);
        }

        StepLog sl;
        sl.step = step;
        std::vector<std::pair<std::size_t, std::size_t>> pairs;
        std::vector<double> weights(B, 1.0);

        switch (cfg.coupling) {
            case Coupling::independent:
                pairs.reserve(B);
                for (std::size_t i = 0; i < B; ++i) pairs.emplace_back(i, i);
                break;
            case Coupling::ot: {
                auto plan = transport::emd_exact(transport::cost_matrix(x0, x1), uniform_a,
                                                 uniform_a);
                pairs = transport::sample_pairs_joint(plan, B, loop_rng);
                break;
            }
            case Coupling::uot_cfm:
            case Coupling::uot_rfm: {
                auto [plan, pot] = transport::sinkhorn_unbalanced(
                    transport::cost_matrix(x0, x1), uniform_a, uniform_a, cfg.uot);
                sl.sinkhorn_iters = plan.iterations;
                sl.sinkhorn_converged = plan.converged;
                if (cfg.coupling == Coupling::uot_cfm) {
                    pairs = transport::sample_pairs_joint(plan, B, loop_rng);
                } else {
                    pairs = transport::sample_pairs_rowwise(plan, loop_rng);
                    auto scores = transport::majority_scores(plan);
                    double mean_raw = 0.0;
                    std::size_t clamped = 0;
                    for (double s : scores.s) {
                        mean_raw += s / static_cast<double>(B);
                        if (s < cfg.score_clamp) ++clamped;
                    }
                    sl.mean_raw_score = mean_raw;
                    sl.clamped_fraction = static_cast<double>(clamped) / static_cast<double>(B);
                    auto wj = make_weights(scores, k_eff, cfg.score_clamp);
                    for (std::size_t i = 0; i < B; ++i) weights[i] = wj[pairs[i].second];
                    if (cfg.renormalize_weights) {
                        double s = 0.0;
                        for (double w : weights) s += w;
                        double scale = static_cast<double>(B) / s;
                        for (double& w : weights) w *= scale;
                    }
                    sl.loss.min_score = *std::min_element(scores.s.begin(), scores.s.end());
                    sl.loss.max_score = *std::max_element(scores.s.begin(), scores.s.end());
                }
                break;
            }
        }

        Mat xt(B, d), u(B, d);
        std::vector<double> tvec(B);
        for (std::size_t i = 0; i < B; ++i) {
            const auto [si, tj] = pairs[i];
            double t = loop_rng.uniform();
            tvec[i] = t;
            for (std::size_t j = 0; j < d; ++j) {
                double mu = t * x1(tj, j) + (1.0 - t) * x0(si, j);
                xt(i, j) = mu + cfg.sigma * loop_rng.normal();
                u(i, j) = x1(tj, j) - x0(si, j);
            }
        }

        double min_s = sl.loss.min_score, max_s = sl.loss.max_score;
        sl.loss = batch_loss(result.net, tvec, xt, u, weights, grad);
        sl.loss.min_score = min_s;
        sl.loss.max_score = max_s;
        model::adam_step(opt, params, grad);
        result.net.unflatten(params);
        result.log.push_back(sl);
    }
    return result;
}

void write_train_log_csv(std::ostream& os, const std::vector<StepLog>& log) {
    os << "step,weighted_loss,unweighted_loss,mean_weight,sinkhorn_iters,converged_flag,"
          "mean_raw_score,clamped_fraction\n";
    for (const StepLog& s : log) {
        os << s.step << ',' << ioutil::fmt(s.loss.weighted_loss) << ','
           << ioutil::fmt(s.loss.unweighted_loss) << ',' << ioutil::fmt(s.loss.mean_weight) << ','
           << s.sinkhorn_iters << ',' << (s.sinkhorn_converged ? 1 : 0) << ','
           << ioutil::fmt(s.mean_raw_score) << ',' << ioutil::fmt(s.clamped_fraction) << '\n';
    }
}

}  // namespace uotflow::flowmatch
