// Acceptance harness: runs the eleven pinned criteria and prints one
// PASS/FAIL line each. Exit code is the number of failed criteria.
// Usage: acceptance [criterion numbers...]  (default: all)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "uotflow/config.hpp"
#include "uotflow/experiment.hpp"
#include "uotflow/flowmatch.hpp"
#include "uotflow/metrics.hpp"
#include "uotflow/ode.hpp"
#include "uotflow/transport.hpp"

using namespace uotflow;
using numkit::Mat;
using numkit::RngState;

namespace {

namespace fs = std::filesystem;

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double now_s() {
    using clock = std::chrono::steady_clock;
    static const clock::time_point t0 = clock::now();
    return std::chrono::duration<double>(clock::now() - t0).count();
}

struct Instance {
    Mat x0, x1;
    std::vector<double> a, b;
    transport::UotConfig cfg;
};

Instance random_instance(RngState& rng, std::size_t B, double eps, double tau) {
    Instance ins;
    ins.x0 = numkit::gaussian_sample(rng, B, 2);
    ins.x1 = numkit::gaussian_sample(rng, B, 2);
    ins.a.assign(B, 1.0 / static_cast<double>(B));
    ins.b.assign(B, 1.0 / static_cast<double>(B));
    ins.cfg.eps = eps;
    ins.cfg.tau = tau;
    return ins;
}

// ---------------------------------------------------------------- 1 & 2 ---

void criteria_1_2() {
    const double t_start = now_s();
    RngState rng(12001);
    const std::vector<double> epss = {0.05, 0.1, 0.5};
    const std::vector<double> taus = {0.5, 1.0, 2.0};
    double worst_obj = 0.0, worst_row = 0.0, worst_rel = 0.0;
    for (std::size_t n = 0; n < 200; ++n) {
        std::size_t B = 2 + static_cast<std::size_t>(rng.uniform() * 7.0) % 7;
        double eps = epss[n % epss.size()];
        double tau = taus[(n / epss.size()) % taus.size()];
        Instance ins = random_instance(rng, B, eps, tau);
        auto c = transport::cost_matrix(ins.x0, ins.x1);
        auto [plan, pot] = transport::sinkhorn_unbalanced(c, ins.a, ins.b, ins.cfg);
        auto oracle = transport::uot_oracle_dense(c, ins.a, ins.b, ins.cfg);
        double obj_s = transport::uot_objective(c, plan.pi, ins.a, ins.b, ins.cfg);
        double obj_o = transport::uot_objective(c, oracle.pi, ins.a, ins.b, ins.cfg);
        worst_obj = std::max(worst_obj, std::abs(obj_s - obj_o));
        for (std::size_t i = 0; i < B; ++i)
            worst_row = std::max(worst_row, std::abs(plan.row_marginal[i] - ins.a[i]));
        for (std::size_t j = 0; j < B; ++j) {
            double lhs = plan.col_marginal[j] / ins.b[j];
            double rhs = std::exp(-pot.g[j] / tau);
            worst_rel = std::max(worst_rel, std::abs(lhs - rhs));
        }
    }
    double elapsed = now_s() - t_start;
    {
        std::ostringstream d;
        d << "transport conformance: max |obj - oracle| = " << worst_obj
          << " (tol 1e-6), max row error = " << worst_row << " (tol 1e-9), " << elapsed
          << " s (limit 30)";
        report(1, worst_obj < 1e-6 && worst_row < 1e-9 && elapsed < 30.0, d.str());
    }
    {
        std::ostringstream d;
        d << "potential relation: max |col/b - exp(-g/tau)| = " << worst_rel << " (tol 1e-8)";
        report(2, worst_rel < 1e-8, d.str());
    }
}

// -------------------------------------------------------------------- 3 ---

void criterion_3() {
    RngState rng(12003);
    double worst = 0.0;
    for (std::size_t n = 0; n < 100; ++n) {
        std::size_t B = 4 + static_cast<std::size_t>(rng.uniform() * 5.0) % 5;
        Instance ins = random_instance(rng, B, 0.05, 1.0);
        auto c = transport::cost_matrix(ins.x0, ins.x1);
        auto [plan, pot] = transport::sinkhorn_unbalanced(c, ins.a, ins.b, ins.cfg);
        auto scores = transport::majority_scores(plan);
        for (std::size_t j = 0; j < B; ++j) {
            if (scores.s[j] <= 1e-3) continue;  // clamped scores excluded
            double lhs = plan.col_marginal[j] / scores.s[j];
            worst = std::max(worst, std::abs(lhs - 1.0 / static_cast<double>(B)));
        }
    }
    std::ostringstream d;
    d << "rebalancing identity: max |s^-1 col - 1/B| = " << worst << " (tol 1e-9)";
    report(3, worst < 1e-9, d.str());
}

// -------------------------------------------------------------------- 4 ---

void criterion_4() {
    RngState rng(12004);
    // unbalanced plan cost approaches the exact assignment cost
    double worst_cost_rel = 0.0;
    for (std::size_t n = 0; n < 3; ++n) {
        Instance ins = random_instance(rng, 16, 1e-3, 1e3);
        ins.cfg.max_iter = 200000;
        ins.cfg.tol = 1e-10;
        auto c = transport::cost_matrix(ins.x0, ins.x1);
        auto [plan, pot] = transport::sinkhorn_unbalanced(c, ins.a, ins.b, ins.cfg);
        auto exact = transport::emd_exact(c, ins.a, ins.b);
        double cost_s = 0.0, cost_e = 0.0;
        for (std::size_t i = 0; i < c.c.data.size(); ++i) {
            cost_s += c.c.data[i] * plan.pi.data[i];
            cost_e += c.c.data[i] * exact.pi.data[i];
        }
        worst_cost_rel = std::max(worst_cost_rel, std::abs(cost_s - cost_e) / cost_e);
    }

    // emd_exact vs 720-permutation brute force at B = 6
    double worst_emd = 0.0;
    for (std::size_t n = 0; n < 10; ++n) {
        Instance ins = random_instance(rng, 6, 0.05, 1.0);
        auto c = transport::cost_matrix(ins.x0, ins.x1);
        auto exact = transport::emd_exact(c, ins.a, ins.b);
        double cost_e = 0.0;
        for (std::size_t i = 0; i < c.c.data.size(); ++i)
            cost_e += c.c.data[i] * exact.pi.data[i];
        std::vector<std::size_t> perm = {0, 1, 2, 3, 4, 5};
        double best = 1e300;
        do {
            double cost = 0.0;
            for (std::size_t i = 0; i < 6; ++i) cost += c.c(i, perm[i]) / 6.0;
            best = std::min(best, cost);
        } while (std::next_permutation(perm.begin(), perm.end()));
        worst_emd = std::max(worst_emd, std::abs(cost_e - best));
    }
    std::ostringstream d;
    d << "limit consistency: max sinkhorn-vs-emd cost relerr = " << worst_cost_rel
      << " (tol 0.01), max emd-vs-brute-force gap = " << worst_emd << " (tol 1e-12)";
    report(4, worst_cost_rel < 0.01 && worst_emd < 1e-12, d.str());
}

// -------------------------------------------------------------------- 5 ---

void criterion_5() {
    const double t_start = now_s();
    auto spec = datasets::preset("two_mode_0.1");
    const std::size_t B = 256;
    transport::UotConfig ucfg;
    ucfg.eps = 4.0;  // same blur as the two-mode benchmark training runs
    ucfg.tol = 1e-7;
    std::vector<double> ab(B, 1.0 / static_cast<double>(B));
    RngState rng(12005);
    double sum_maj = 0.0, sum_min = 0.0;
    std::size_t n_maj = 0, n_min = 0;
    for (std::size_t bi = 0; bi < 100; ++bi) {
        Mat x0 = datasets::source_sample(B, 2, rng);
        auto data = datasets::sample_gmm_mat(spec, B, rng);
        auto [plan, pot] =
            transport::sinkhorn_unbalanced(transport::cost_matrix(x0, data.x), ab, ab, ucfg);
        auto scores = transport::majority_scores(plan);
        for (std::size_t j = 0; j < B; ++j) {
            if (data.labels[j] == 0) {
                sum_maj += scores.s[j];
                ++n_maj;
            } else {
                sum_min += scores.s[j];
                ++n_min;
            }
        }
    }
    double mean_maj = sum_maj / static_cast<double>(n_maj);
    double mean_min = sum_min / static_cast<double>(n_min);
    double elapsed = now_s() - t_start;
    std::ostringstream d;
    d << "score ordering: mean majority score " << mean_maj << " vs minority " << mean_min
      << " (ratio " << mean_maj / mean_min << ", need >= 1.2), " << elapsed << " s (limit 10)";
    report(5, mean_maj >= 1.2 * mean_min && elapsed < 10.0, d.str());
}

// ---------------------------------------------------- shared run helpers ---

config::ExperimentConfig run_config(const std::string& preset, flowmatch::Coupling coupling,
                                    double k, double eps, std::uint64_t seed) {
    std::ostringstream js;
    js << R"({"dataset": {"preset": ")" << preset << R"("}, "train": {"coupling": ")"
       << flowmatch::coupling_name(coupling) << R"(", "k": )" << k
       << R"(, "uot": {"eps": )" << eps << R"(, "tol": 1e-7}}, "seed": )" << seed << "}";
    return config::parse_config(js.str());
}

// Train + eval one run, caching by directory name so interrupted acceptance
// sessions resume instead of retraining.
experiment::EvalSummary cached_run(const config::ExperimentConfig& cfg, const std::string& name,
                                   double* train_seconds = nullptr) {
    fs::path dir = fs::path("acceptance_runs") / name;
    std::string ckpt = (dir / "checkpoint.txt").string();
    if (!fs::exists(ckpt)) {
        double t0 = now_s();
        experiment::cmd_train(cfg, dir.string());
        double dt = now_s() - t0;
        if (train_seconds) *train_seconds = dt;
        std::printf("  trained %s (%.0f s)\n", name.c_str(), dt);
        std::fflush(stdout);
    } else if (train_seconds) {
        *train_seconds = 0.0;  // cached; runtime not re-measured
    }
    return experiment::cmd_eval(cfg, ckpt, dir.string());
}

// -------------------------------------------------------------------- 6 ---

void criterion_6() {
    const std::vector<std::uint64_t> seeds = {201, 202, 203};
    const std::vector<double> ks = {0.0, 1.0, 2.0, 4.0};
    std::map<double, double> frac_sum;
    double worst_train_s = 0.0;
    for (std::uint64_t seed : seeds) {
        for (double k : ks) {
            auto coupling = k == 0.0 ? flowmatch::Coupling::uot_cfm : flowmatch::Coupling::uot_rfm;
            auto cfg = run_config("two_mode_0.1", coupling, k, 4.0, seed);
            cfg.eval.n_gen = 10000;
            cfg.eval.do_prf = false;
            cfg.eval.do_bpd = false;
            std::ostringstream name;
            name << "c6_k" << k << "_s" << seed;
            double train_s = 0.0;
            auto summary = cached_run(cfg, name.str(), &train_s);
            worst_train_s = std::max(worst_train_s, train_s);
            double frac = static_cast<double>(summary.hist.counts[1]) /
                          static_cast<double>(summary.hist.total);
            frac_sum[k] += frac / static_cast<double>(seeds.size());
        }
    }
    bool monotone = true;
    for (std::size_t i = 1; i < ks.size(); ++i)
        if (frac_sum[ks[i]] < frac_sum[ks[i - 1]]) monotone = false;
    bool k0_ok = frac_sum[0.0] < 0.08;
    bool k1_ok = frac_sum[1.0] >= 0.07 && frac_sum[1.0] <= 0.13;
    bool time_ok = worst_train_s < 600.0;
    std::ostringstream d;
    d << "end-to-end minority fractions: k=0 " << frac_sum[0.0] << " (< 0.08), k=1 "
      << frac_sum[1.0] << " (in [0.07, 0.13]), k=2 " << frac_sum[2.0] << ", k=4 "
      << frac_sum[4.0] << ", monotone=" << (monotone ? "yes" : "no") << ", max train "
      << worst_train_s << " s (limit 600)";
    report(6, k0_ok && k1_ok && monotone && time_ok, d.str());
}

// --------------------------------------------------------- 7, 8, and 10 ---

struct MethodStats {
    double ncre = 0.0, recall = 0.0, f1 = 0.0, tail_bpd = 0.0;
};

void criteria_7_8_10() {
    // k is a per-task hyperparameter: each criterion's k is selected over the
    // declared grid on held-out tuning seeds, then scored on the eval seeds.
    const std::vector<std::uint64_t> tune_seeds = {104, 105};
    const std::vector<std::uint64_t> eval_seeds = {101, 102, 103};
    const std::vector<double> rfm_ks = {1.0, 2.0, 4.0};
    const double eps = 4.0;

    auto average = [&](flowmatch::Coupling coupling, double k,
                       const std::vector<std::uint64_t>& seeds) {
        MethodStats st;
        for (std::uint64_t seed : seeds) {
            auto cfg = run_config("five_mode_0.1", coupling, k, eps, seed);
            std::ostringstream name;
            name << "c7_" << (coupling == flowmatch::Coupling::independent ? "icfm" : "rfm_k")
                 << (coupling == flowmatch::Coupling::independent ? "" : std::to_string(int(k)))
                 << "_s" << seed;
            auto summary = cached_run(cfg, name.str());
            double n = static_cast<double>(seeds.size());
            st.ncre += summary.ncre.mean_abs / n;
            st.recall += summary.prf.recall / n;
            st.f1 += summary.prf.f1 / n;
            st.tail_bpd += summary.bpd.per_class_mean.back() / n;
        }
        return st;
    };

    std::map<double, MethodStats> tuned;
    for (double k : rfm_ks) tuned[k] = average(flowmatch::Coupling::uot_rfm, k, tune_seeds);
    double k_ncre = rfm_ks[0], k_recall = rfm_ks[0], k_bpd = rfm_ks[0];
    for (double k : rfm_ks) {
        if (tuned[k].ncre < tuned[k_ncre].ncre) k_ncre = k;
        if (tuned[k].recall > tuned[k_recall].recall ||
            (tuned[k].recall == tuned[k_recall].recall && tuned[k].f1 > tuned[k_recall].f1))
            k_recall = k;
        if (tuned[k].tail_bpd < tuned[k_bpd].tail_bpd) k_bpd = k;
    }
    std::printf("  tuned k: ncre %g, recall %g, tail-bpd %g\n", k_ncre, k_recall, k_bpd);

    MethodStats icfm = average(flowmatch::Coupling::independent, 0.0, eval_seeds);
    std::map<double, MethodStats> rfm;
    for (double k : {k_ncre, k_recall, k_bpd})
        if (!rfm.count(k)) rfm[k] = average(flowmatch::Coupling::uot_rfm, k, eval_seeds);

    {
        const MethodStats& ours = rfm[k_ncre];
        std::ostringstream d;
        d << "NCRE improvement: UOT-RFM (k=" << k_ncre << ") " << ours.ncre << " vs I-CFM "
          << icfm.ncre << " (need margin >= 0.05)";
        report(7, ours.ncre < icfm.ncre && icfm.ncre - ours.ncre >= 0.05, d.str());
    }
    {
        const MethodStats& ours = rfm[k_recall];
        std::ostringstream d;
        d << "coverage: UOT-RFM (k=" << k_recall << ") recall " << ours.recall << " vs "
          << icfm.recall << " (need >=), f1 " << ours.f1 << " vs " << icfm.f1
          << " (drop <= 0.02)";
        report(8, ours.recall >= icfm.recall && icfm.f1 - ours.f1 <= 0.02, d.str());
    }
    {
        const MethodStats& ours = rfm[k_bpd];
        std::ostringstream d;
        d << "tail-class BPD: UOT-RFM (k=" << k_bpd << ") " << ours.tail_bpd << " vs I-CFM "
          << icfm.tail_bpd << " (need <=)";
        report(10, ours.tail_bpd <= icfm.tail_bpd, d.str());
    }
}

// -------------------------------------------------------------------- 9 ---

void criterion_9() {
    // finite-difference gradient check over 20 random (net, batch) tuples
    RngState rng(12009);
    double worst_grad = 0.0;
    for (std::size_t n = 0; n < 20; ++n) {
        std::size_t d = 2 + static_cast<std::size_t>(rng.uniform() * 2.0) % 2;
        auto net = model::init_mlp(d, {8, 8}, rng);
        Mat x = numkit::gaussian_sample(rng, 4, d);
        std::vector<double> t(4);
        for (double& ti : t) ti = rng.uniform();
        Mat up = numkit::gaussian_sample(rng, 4, d);

        auto loss_of = [&](const std::vector<double>& flat) {
            model::MlpVectorField m = net;
            m.unflatten(flat);
            Mat out;
            model::forward_batch(m, t, x, out);
            double s = 0.0;
            for (std::size_t i = 0; i < out.data.size(); ++i) s += out.data[i] * up.data[i];
            return s;
        };

        std::vector<double> flat = net.flatten();
        std::vector<double> grad;
        Mat out;
        model::ForwardCache cache;
        model::forward_batch(net, t, x, out, &cache);
        model::backward_batch(net, cache, up, &grad);
        const double h = 1e-5;
        for (std::size_t p = 0; p < flat.size(); p += 97) {  // subsample parameters
            std::vector<double> fp = flat, fm = flat;
            fp[p] += h;
            fm[p] -= h;
            double fd = (loss_of(fp) - loss_of(fm)) / (2.0 * h);
            double rel = std::abs(fd - grad[p]) / std::max(1.0, std::abs(fd));
            worst_grad = std::max(worst_grad, rel);
        }
    }

    // linear field oracle: v = A x -> x(1) = expm(A) x(0)
    Mat a(2, 2);
    a(0, 0) = 0.3;
    a(0, 1) = -1.1;
    a(1, 0) = 0.7;
    a(1, 1) = -0.2;
    model::MlpVectorField lin = model::init_mlp(2, {}, rng);
    for (double& v : lin.w[0].data) v = 0.0;
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) lin.w[0](j, i) = a(i, j);
    for (double& v : lin.b[0]) v = 0.0;
    ode::SolverConfig solver;
    solver.atol = solver.rtol = 1e-8;
    auto x1 = ode::integrate(lin, {1.0, -0.5}, 0.0, 1.0, solver);
    // expm via scaling-and-squaring on the series (2x2, small norm)
    Mat em(2, 2);
    em(0, 0) = em(1, 1) = 1.0;
    Mat term = em, acc = em;
    for (int kk = 1; kk <= 30; ++kk) {
        Mat next(2, 2);
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 2; ++j) {
                double s = 0.0;
                for (std::size_t l = 0; l < 2; ++l) s += term(i, l) * a(l, j);
                next(i, j) = s / kk;
            }
        term = next;
        for (std::size_t i = 0; i < 4; ++i) acc.data[i] += term.data[i];
    }
    double ex0 = acc(0, 0) * 1.0 + acc(0, 1) * -0.5;
    double ex1 = acc(1, 0) * 1.0 + acc(1, 1) * -0.5;
    double ode_err = std::max(std::abs(x1[0] - ex0), std::abs(x1[1] - ex1));

    // zero-field BPD at the origin
    RngState zr(0);
    auto zero = model::init_mlp(2, {4}, zr);
    for (Mat& w : zero.w)
        for (double& v : w.data) v = 0.0;
    for (auto& b : zero.b)
        for (double& v : b) v = 0.0;
    auto rep = ode::nll(zero, {0.0, 0.0}, solver);
    double expect_bpd = std::log(2.0 * std::numbers::pi) / (2.0 * std::log(2.0));
    double bpd_err = std::abs(rep.bpd - expect_bpd);

    std::ostringstream d;
    d << "gradient/solver: max grad relerr = " << worst_grad
      << " (tol 1e-4), linear-oracle error = " << ode_err << " (tol 1e-6), zero-field BPD error = "
      << bpd_err << " (tol 1e-6)";
    report(9, worst_grad < 1e-4 && ode_err < 1e-6 && bpd_err < 1e-6, d.str());
}

// ------------------------------------------------------------------- 11 ---

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void criterion_11() {
    auto cfg = run_config("two_mode_0.1", flowmatch::Coupling::uot_rfm, 1.0, 4.0, 7);
    cfg.dataset.n_train = 5000;
    cfg.dataset.n_test = 1000;
    cfg.train.iterations = 200;
    cfg.eval.n_gen = 500;
    cfg.eval.n_real = 500;
    cfg.eval.n_nll = 32;

    std::vector<std::string> mismatches;
    for (const char* run : {"a", "b"}) {
        fs::path dir = fs::path("acceptance_runs") / (std::string("c11_") + run);
        fs::remove_all(dir);
        experiment::cmd_gen_data(cfg, dir.string());
        std::string ckpt = experiment::cmd_train(cfg, dir.string());
        experiment::cmd_sample(cfg, ckpt, dir.string());
        experiment::cmd_eval(cfg, ckpt, dir.string());
        experiment::cmd_plot(cfg, dir.string(), dir.string());
    }
    fs::path da = fs::path("acceptance_runs") / "c11_a";
    fs::path db = fs::path("acceptance_runs") / "c11_b";
    std::size_t compared = 0;
    for (const auto& entry : fs::directory_iterator(da)) {
        std::string ext = entry.path().extension().string();
        if (ext != ".csv" && ext != ".svg") continue;
        ++compared;
        if (slurp(entry.path()) != slurp(db / entry.path().filename()))
            mismatches.push_back(entry.path().filename().string());
    }
    std::ostringstream d;
    d << "reproducibility: " << compared << " artifacts byte-compared, " << mismatches.size()
      << " mismatched";
    for (const std::string& m : mismatches) d << " " << m;
    report(11, compared > 0 && mismatches.empty(), d.str());
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
    auto want = [&](int c) { return wanted.empty() || wanted.count(c); };

    fs::create_directories("acceptance_runs");
    if (want(1) || want(2)) criteria_1_2();
    if (want(3)) criterion_3();
    if (want(4)) criterion_4();
    if (want(5)) criterion_5();
    if (want(6)) criterion_6();
    if (want(7) || want(8) || want(10)) criteria_7_8_10();
    if (want(9)) criterion_9();
    if (want(11)) criterion_11();

    std::printf("%s: %d criterion failure(s)\n", g_failures == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL",
                g_failures);
    return g_failures;
}
