#include "uotflow/experiment.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "uotflow/flowmatch.hpp"
#include "uotflow/ioutil.hpp"
#include "uotflow/ode.hpp"
#include "uotflow/svgplot.hpp"
#include "uotflow/transport.hpp"

namespace uotflow::experiment {

namespace fs = std::filesystem;
using config::ExperimentConfig;
using numkit::Mat;
using numkit::RngState;

namespace {

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string color_for(std::size_t k) { return kPalette[k % 8]; }

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

class Manifest {
public:
    Manifest(const ExperimentConfig& cfg, std::string out_dir)
        : out_dir_(std::move(out_dir)), start_(std::chrono::steady_clock::now()) {
        std::ostringstream hex;
        hex << std::hex << fnv1a(config::dump_config(cfg));
        hash_ = hex.str();
        fs::create_directories(out_dir_);
    }

    std::string path(const std::string& name) {
        files_.push_back(name);
        return (fs::path(out_dir_) / name).string();
    }

    void finalize() {
        for (const std::string& f : files_) {
            fs::path p = fs::path(out_dir_) / f;
            if (!fs::exists(p) || fs::file_size(p) == 0)
                throw std::runtime_error("manifest: missing or empty artifact " + f);
        }
        nlohmann::json j;
        j["version"] = 1;
        j["config_hash"] = hash_;
        j["artifacts"] = files_;
        j["wall_clock_s"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        std::ofstream os(fs::path(out_dir_) / "manifest.json");
        os << j.dump(2) << '\n';
    }

private:
    std::string out_dir_;
    std::string hash_;
    std::vector<std::string> files_;
    std::chrono::steady_clock::time_point start_;
};

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    return os;
}

// Deterministic datasets derived from (config, seed) alone, so every command
// regenerates identical data without inter-command file dependencies.
datasets::LabeledData train_data(const ExperimentConfig& cfg) {
    RngState rng(cfg.seed);
    RngState r = rng.fork("train-data");
    return datasets::sample_gmm_mat(cfg.dataset.spec, cfg.dataset.n_train, r);
}

datasets::LabeledData test_data(const ExperimentConfig& cfg) {
    RngState rng(cfg.seed);
    RngState r = rng.fork("test-data");
    return datasets::sample_gmm_mat(cfg.dataset.spec, cfg.dataset.n_test, r);
}

Mat sample_from_net(const ExperimentConfig& cfg, const model::MlpVectorField& net,
                    std::size_t n) {
    RngState rng(cfg.seed);
    RngState r = rng.fork("sample");
    return ode::sample_model(net, n, cfg.solver, r);
}

model::MlpVectorField load_net(const std::string& checkpoint) {
    std::ifstream is(checkpoint);
    if (!is) throw std::runtime_error("cannot open checkpoint " + checkpoint);
    return model::load_checkpoint(is);
}

void write_samples_csv(std::ostream& os, const Mat& pts, const datasets::GmmSpec& spec) {
    datasets::LabeledData d;
    d.x = pts;
    d.labels = datasets::proxy_labels(pts, spec);
    datasets::write_dataset_csv(os, d);
}

// Spread of majority scores over fresh batches; the sweep's tau-sensitivity
// column.
double score_variance(const ExperimentConfig& cfg, std::size_t n_batches, RngState& rng) {
    const std::size_t B = cfg.train.batch_size;
    std::vector<double> a(B, 1.0 / static_cast<double>(B));
    auto data = train_data(cfg);
    double sum = 0.0, sum_sq = 0.0;
    std::size_t count = 0;
    for (std::size_t bi = 0; bi < n_batches; ++bi) {
        Mat x0 = datasets::source_sample(B, cfg.dataset.spec.d, rng);
        Mat x1(B, cfg.dataset.spec.d);
        for (std::size_t i = 0; i < B; ++i) {
            auto idx = static_cast<std::size_t>(rng.uniform() *
                                                static_cast<double>(data.x.rows));
            idx = std::min(idx, data.x.rows - 1);
            for (std::size_t j = 0; j < cfg.dataset.spec.d; ++j) x1(i, j) = data.x(idx, j);
        }
        auto [plan, pot] = transport::sinkhorn_unbalanced(transport::cost_matrix(x0, x1), a, a,
                                                          cfg.train.uot);
        for (double s : transport::majority_scores(plan).s) {
            sum += s;
            sum_sq += s * s;
            ++count;
        }
    }
    double mean = sum / static_cast<double>(count);
    return sum_sq / static_cast<double>(count) - mean * mean;
}

}  // namespace

void cmd_gen_data(const ExperimentConfig& cfg, const std::string& out_dir) {
    Manifest mf(cfg, out_dir);
    {
        auto os = open_out(mf.path("train.csv"));
        datasets::write_dataset_csv(os, train_data(cfg));
    }
    {
        auto os = open_out(mf.path("test.csv"));
        datasets::write_dataset_csv(os, test_data(cfg));
    }
    {
        auto os = open_out(mf.path("resolved_config.json"));
        os << config::dump_config(cfg) << '\n';
    }
    mf.finalize();
}

std::string cmd_train(const ExperimentConfig& cfg, const std::string& out_dir) {
    Manifest mf(cfg, out_dir);
    auto data = train_data(cfg);
    RngState rng(cfg.seed);
    RngState train_rng = rng.fork("train");
    auto result = flowmatch::train(cfg.train, data.x, train_rng);
    std::string ckpt = mf.path("checkpoint.txt");
    {
        auto os = open_out(ckpt);
        model::save_checkpoint(os, result.net);
    }
    {
        auto os = open_out(mf.path("train_log.csv"));
        flowmatch::write_train_log_csv(os, result.log);
    }
    mf.finalize();
    return ckpt;
}

Mat cmd_sample(const ExperimentConfig& cfg, const std::string& checkpoint,
               const std::string& out_dir) {
    Manifest mf(cfg, out_dir);
    auto net = load_net(checkpoint);
    Mat pts = sample_from_net(cfg, net, cfg.eval.n_gen);
    {
        auto os = open_out(mf.path("samples.csv"));
        write_samples_csv(os, pts, cfg.dataset.spec);
    }
    mf.finalize();
    return pts;
}

EvalSummary cmd_eval(const ExperimentConfig& cfg, const std::string& checkpoint,
                     const std::string& out_dir) {
    Manifest mf(cfg, out_dir);
    auto net = load_net(checkpoint);
    auto test = test_data(cfg);
    Mat gen = sample_from_net(cfg, net, cfg.eval.n_gen);

    EvalSummary summary;
    summary.hist = metrics::class_histogram(gen, cfg.dataset.spec);
    {
        auto os = open_out(mf.path("samples.csv"));
        write_samples_csv(os, gen, cfg.dataset.spec);
    }
    {
        auto os = open_out(mf.path("histogram.csv"));
        metrics::write_histogram_csv(os, summary.hist);
    }
    if (cfg.eval.do_ncre) {
        summary.ncre = metrics::ncre(summary.hist, cfg.dataset.spec.weights);
        auto os = open_out(mf.path("ncre.csv"));
        metrics::write_ncre_csv(os, summary.ncre);
    }
    if (cfg.eval.do_prf) {
        std::size_t n_real = std::min(cfg.eval.n_real, test.x.rows);
        std::size_t n_gen = std::min(cfg.eval.n_gen, gen.rows);
        Mat real(n_real, test.x.cols), gsub(n_gen, gen.cols);
        for (std::size_t i = 0; i < n_real; ++i)
            for (std::size_t j = 0; j < test.x.cols; ++j) real(i, j) = test.x(i, j);
        for (std::size_t i = 0; i < n_gen; ++i)
            for (std::size_t j = 0; j < gen.cols; ++j) gsub(i, j) = gen(i, j);
        summary.prf = metrics::knn_precision_recall(real, gsub, cfg.eval.knn_k);
        auto os = open_out(mf.path("prf.csv"));
        metrics::write_prf_csv(os, summary.prf);
    }
    if (cfg.eval.do_bpd) {
        // Stratified NLL subset: up to n_nll/M test points per class.
        const std::size_t m = cfg.dataset.spec.modes.size();
        std::size_t per_class = std::max<std::size_t>(1, cfg.eval.n_nll / m);
        std::vector<std::size_t> picked;
        std::vector<std::size_t> taken(m, 0);
        for (std::size_t i = 0; i < test.x.rows; ++i) {
            if (taken[test.labels[i]] < per_class) {
                ++taken[test.labels[i]];
                picked.push_back(i);
            }
        }
        Mat xs(picked.size(), test.x.cols);
        std::vector<std::size_t> ls(picked.size());
        for (std::size_t i = 0; i < picked.size(); ++i) {
            ls[i] = test.labels[picked[i]];
            for (std::size_t j = 0; j < test.x.cols; ++j) xs(i, j) = test.x(picked[i], j);
        }
        summary.bpd = metrics::classwise_bpd(net, xs, ls, m, cfg.solver);
        auto os = open_out(mf.path("bpd.csv"));
        metrics::write_bpd_csv(os, summary.bpd);
    }
    mf.finalize();
    return summary;
}

void cmd_sweep(const ExperimentConfig& cfg, const std::vector<double>& taus,
               const std::vector<double>& ks, const std::string& out_dir) {
    if (taus.empty() || ks.empty()) throw std::invalid_argument("sweep: empty grid");
    Manifest mf(cfg, out_dir);
    auto os = open_out(mf.path("sweep.csv"));
    os << "tau,k,mean_abs_ncre,precision,recall,f1,overall_bpd,tail_bpd,minority_fraction,"
          "final_weighted_loss,score_variance,status\n";
    for (double tau : taus) {
        for (double k : ks) {
            ExperimentConfig cell = cfg;
            cell.train.uot.tau = tau;
            cell.train.k = k;
            std::ostringstream name;
            name << "cell_tau" << ioutil::fmt(tau) << "_k" << ioutil::fmt(k);
            std::string cell_dir = (fs::path(out_dir) / name.str()).string();
            os << ioutil::fmt(tau) << ',' << ioutil::fmt(k) << ',';
            try {
                std::string ckpt = cmd_train(cell, cell_dir);
                EvalSummary s = cmd_eval(cell, ckpt, cell_dir);
                double final_loss = 0.0;
                {
                    auto rows = ioutil::read_csv((fs::path(cell_dir) / "train_log.csv").string());
                    if (rows.size() > 1) final_loss = std::stod(rows.back()[1]);
                }
                RngState rng(cell.seed);
                RngState sv_rng = rng.fork("score-variance");
                double sv = score_variance(cell, 20, sv_rng);
                std::size_t tail = cfg.dataset.spec.modes.size() - 1;
                double minority = static_cast<double>(s.hist.counts[tail]) /
                                  static_cast<double>(std::max<std::size_t>(s.hist.total, 1));
                os << ioutil::fmt(s.ncre.mean_abs) << ',' << ioutil::fmt(s.prf.precision) << ','
                   << ioutil::fmt(s.prf.recall) << ',' << ioutil::fmt(s.prf.f1) << ','
                   << ioutil::fmt(s.bpd.overall_mean) << ','
                   << ioutil::fmt(s.bpd.per_class_mean[tail]) << ',' << ioutil::fmt(minority)
                   << ',' << ioutil::fmt(final_loss) << ',' << ioutil::fmt(sv) << ",ok\n";
            } catch (const std::exception& e) {
                std::string msg = e.what();
                for (char& c : msg)
                    if (c == ',' || c == '\n') c = ';';
                os << ",,,,,,,,," << "error: " << msg << '\n';
            }
        }
    }
    os.close();
    mf.finalize();
}

void cmd_plot(const ExperimentConfig& cfg, const std::string& in_dir,
              const std::string& out_dir) {
    Manifest mf(cfg, out_dir);
    const datasets::GmmSpec& spec = cfg.dataset.spec;
    const std::size_t m = spec.modes.size();

    // Generated scatter colored by proxy label, real test data in gray.
    auto samples_path = (fs::path(in_dir) / "samples.csv").string();
    datasets::LabeledData gen;
    bool have_gen = fs::exists(samples_path);
    if (have_gen) gen = datasets::read_dataset_csv(samples_path);
    auto test = test_data(cfg);
    {
        std::vector<svgplot::Series> series;
        svgplot::Series real;
        real.label = "real";
        real.color = "#bbbbbb";
        std::size_t n_real = std::min<std::size_t>(test.x.rows, 2000);
        for (std::size_t i = 0; i < n_real; ++i) {
            real.x.push_back(test.x(i, 0));
            real.y.push_back(test.x.cols > 1 ? test.x(i, 1) : 0.0);
        }
        series.push_back(std::move(real));
        for (std::size_t c = 0; c < m; ++c) {
            svgplot::Series s;
            s.label = "gen class " + std::to_string(c);
            s.color = color_for(c);
            series.push_back(std::move(s));
        }
        for (std::size_t i = 0; i < gen.x.rows; ++i) {
            svgplot::Series& s = series[1 + gen.labels[i]];
            s.x.push_back(gen.x(i, 0));
            s.y.push_back(gen.x.cols > 1 ? gen.x(i, 1) : 0.0);
        }
        auto os = open_out(mf.path("scatter.svg"));
        svgplot::scatter_svg(os, "generated vs real (proxy labels)", series);
    }

    // Majority-score heat scatter on one fresh batch.
    {
        RngState rng(cfg.seed);
        RngState r = rng.fork("plot-scores");
        const std::size_t B = cfg.train.batch_size;
        std::vector<double> a(B, 1.0 / static_cast<double>(B));
        Mat x0 = datasets::source_sample(B, spec.d, r);
        auto batch = datasets::sample_gmm_mat(spec, B, r);
        auto [plan, pot] = transport::sinkhorn_unbalanced(transport::cost_matrix(x0, batch.x), a,
                                                          a, cfg.train.uot);
        auto scores = transport::majority_scores(plan);
        svgplot::Series s;
        s.label = "targets (opacity = score)";
        s.color = "#d62728";
        for (std::size_t j = 0; j < B; ++j) {
            s.x.push_back(batch.x(j, 0));
            s.y.push_back(batch.x.cols > 1 ? batch.x(j, 1) : 0.0);
            s.value.push_back(scores.s[j]);
        }
        auto os = open_out(mf.path("scores.svg"));
        svgplot::scatter_svg(os, "majority scores", {s});
    }

    // Class-ratio bars and NCRE bars.
    {
        std::vector<std::string> cats;
        for (std::size_t c = 0; c < m; ++c) cats.push_back(std::to_string(c));
        svgplot::BarGroup data_g{"data", "#1f77b4", spec.weights};
        svgplot::BarGroup gen_g{"generated", "#ff7f0e", std::vector<double>(m, 0.0)};
        std::vector<double> signed_ncre(m, 0.0);
        if (have_gen && gen.x.rows > 0) {
            metrics::ClassHistogram h;
            h.counts.assign(m, 0);
            h.total = gen.x.rows;
            for (std::size_t lab : gen.labels) ++h.counts[lab];
            for (std::size_t c = 0; c < m; ++c)
                gen_g.values[c] = static_cast<double>(h.counts[c]) /
                                  static_cast<double>(h.total);
            signed_ncre = metrics::ncre(h, spec.weights).signed_ncre;
        }
        {
            auto os = open_out(mf.path("class_ratios.svg"));
            svgplot::bar_svg(os, "class proportions", cats, {data_g, gen_g});
        }
        {
            auto os = open_out(mf.path("ncre.svg"));
            svgplot::bar_svg(os, "signed NCRE", cats,
                             {svgplot::BarGroup{"signed ncre", "#2ca02c", signed_ncre}});
        }
    }
    mf.finalize();
}

}  // namespace uotflow::experiment
