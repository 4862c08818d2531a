#include "uotflow/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "uotflow/ioutil.hpp"

namespace uotflow::transport {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_marginals(const CostMatrix& c, const std::vector<double>& a,
                     const std::vector<double>& b) {
    if (a.size() != c.c.rows || b.size() != c.c.cols)
        throw std::invalid_argument("marginal lengths do not match cost matrix");
    for (double x : a)
        if (!(x > 0.0)) throw std::invalid_argument("source marginal must be strictly positive");
    for (double x : b)
        if (!(x > 0.0)) throw std::invalid_argument("target marginal must be strictly positive");
}

// KL(p||q) with mass terms: sum p*ln(p/q) - p + q; p == 0 contributes q.
double kl_mass(const std::vector<double>& p, const std::vector<double>& q) {
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] > 0.0) acc += p[i] * std::log(p[i] / q[i]) - p[i] + q[i];
        else acc += q[i];
    }
    return acc;
}

TransportPlan assemble_plan(Mat pi) {
    TransportPlan plan;
    plan.row_marginal.assign(pi.rows, 0.0);
    plan.col_marginal.assign(pi.cols, 0.0);
    for (std::size_t i = 0; i < pi.rows; ++i)
        for (std::size_t j = 0; j < pi.cols; ++j) {
            double m = pi(i, j);
            plan.row_marginal[i] += m;
            plan.col_marginal[j] += m;
            plan.total_mass += m;
        }
    plan.pi = std::move(pi);
    return plan;
}

}  // namespace

void UotConfig::validate() const {
    if (!(eps > 0.0)) throw std::invalid_argument("UotConfig: eps must be > 0");
    if (!(tau > 0.0)) throw std::invalid_argument("UotConfig: tau must be > 0");
    if (max_iter < 1) throw std::invalid_argument("UotConfig: max_iter must be >= 1");
    if (!(tol > 0.0)) throw std::invalid_argument("UotConfig: tol must be > 0");
}

CostMatrix cost_matrix(const Mat& x0, const Mat& x1) {
    if (x0.cols != x1.cols) throw std::invalid_argument("cost_matrix: dimension mismatch");
    CostMatrix out;
    out.c = Mat(x0.rows, x1.rows);
    for (std::size_t i = 0; i < x0.rows; ++i) {
        const double* xi = x0.row_ptr(i);
        for (std::size_t j = 0; j < x1.rows; ++j) {
            const double* yj = x1.row_ptr(j);
            double s = 0.0;
            for (std::size_t k = 0; k < x0.cols; ++k) {
                double d = xi[k] - yj[k];
                s += d * d;
            }
            out.c(i, j) = 0.5 * s;
        }
    }
    return out;
}

std::pair<TransportPlan, SinkhornPotentials> sinkhorn_unbalanced(
    const CostMatrix& c, const std::vector<double>& a, const std::vector<double>& b,
    const UotConfig& cfg) {
    cfg.validate();
    check_marginals(c, a, b);
    const std::size_t n = a.size(), m = b.size();
    const double eps = cfg.eps;
    const double f1 = cfg.source_fixed ? 1.0 : cfg.tau / (cfg.tau + eps);
    const double f2 = cfg.tau / (cfg.tau + eps);

    std::vector<double> la(n), lb(m);
    for (std::size_t i = 0; i < n; ++i) la[i] = std::log(a[i]);
    for (std::size_t j = 0; j < m; ++j) lb[j] = std::log(b[j]);

    Mat D(n, m);  // -c/eps
    for (std::size_t k = 0; k < D.size(); ++k) D.data[k] = -c.c.data[k] / eps;

    // Absorbed log potentials (f, g) plus linear scalings (u, v); the plan is
    // pi_ij = a_i b_j u_i v_j K0_ij with K0_ij = exp(D_ij + (f_i + g_j)/eps).
    std::vector<double> f(n, 0.0), g(m, 0.0);
    std::vector<double> u(n, 1.0), v(m, 1.0);
    Mat K0(n, m);
    auto rebuild = [&] {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j)
                K0(i, j) = std::exp(D(i, j) + (f[i] + g[j]) / eps);
    };
    auto absorb = [&] {
        for (std::size_t i = 0; i < n; ++i) f[i] += eps * std::log(u[i]);
        for (std::size_t j = 0; j < m; ++j) g[j] += eps * std::log(v[j]);
        std::fill(u.begin(), u.end(), 1.0);
        std::fill(v.begin(), v.end(), 1.0);
        rebuild();
    };

    // One full log-domain sweep to seed the potentials; with small eps the
    // raw kernel underflows before any scaling is known.
    {
        Mat L(n, m);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) L(i, j) = lb[j] + D(i, j);
        auto lse = numkit::logsumexp_rows(L);
        for (std::size_t i = 0; i < n; ++i) f[i] = -f1 * eps * lse[i];
        Mat Lt(m, n);
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t i = 0; i < n; ++i) Lt(j, i) = la[i] + D(i, j) + f[i] / eps;
        auto lset = numkit::logsumexp_rows(Lt);
        for (std::size_t j = 0; j < m; ++j) g[j] = -f2 * eps * lset[j];
        rebuild();
    }

    std::vector<double> bv(m), au(n), w(n), z(m);
    std::vector<double> psi(m), psi_prev(m), dpsi(m, 0.0), dpsi_prev(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) psi[j] = g[j];
    double gchange = kInf, fchange = kInf;
    double prev_gchange = kInf;
    bool converged = false;
    std::size_t iters = 0;
    int quarantine = 1;  // iterations to run before trusting termination again

    for (std::size_t it = 1; it <= cfg.max_iter; ++it) {
        iters = it;
        for (std::size_t j = 0; j < m; ++j) bv[j] = b[j] * v[j];
        w = numkit::matvec(K0, bv);

        // Row residual of the current (post g-update) plan.
        double res = 0.0;
        for (std::size_t i = 0; i < n; ++i) res = std::max(res, a[i] * std::abs(u[i] * w[i] - 1.0));

        if (quarantine == 0) {
            bool pot_ok = cfg.source_fixed ? (gchange < cfg.tol)
                                           : (gchange < cfg.tol && fchange < cfg.tol);
            if (pot_ok && (!cfg.source_fixed || res < cfg.tol)) {
                converged = true;
                iters = it - 1;
                break;
            }
        } else {
            --quarantine;
        }

        // f-update.
        double fch = 0.0;
        bool trouble = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (!(w[i] > 0.0) || !std::isfinite(w[i])) { trouble = true; break; }
            double phi_old = f[i] + eps * std::log(u[i]);
            double phi_new = f1 * f[i] - f1 * eps * std::log(w[i]);
            fch = std::max(fch, std::abs(phi_new - phi_old));
            u[i] = std::exp((phi_new - f[i]) / eps);
        }
        if (trouble) {
            // Kernel row underflow; redo the seeding sweep at the current potentials.
            absorb();
            quarantine = 1;
            continue;
        }
        fchange = fch;

        // g-update.
        for (std::size_t i = 0; i < n; ++i) au[i] = a[i] * u[i];
        z = numkit::matvec_t(K0, au);
        psi_prev = psi;
        double gch = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            if (!(z[j] > 0.0) || !std::isfinite(z[j])) { trouble = true; break; }
            double psi_new = f2 * g[j] - f2 * eps * std::log(z[j]);
            gch = std::max(gch, std::abs(psi_new - psi[j]));
            psi[j] = psi_new;
            v[j] = std::exp((psi_new - g[j]) / eps);
        }
        if (trouble) {
            absorb();
            quarantine = 1;
            continue;
        }
        prev_gchange = gchange;
        gchange = gch;
        for (std::size_t j = 0; j < m; ++j) {
            dpsi_prev[j] = dpsi[j];
            dpsi[j] = psi[j] - psi_prev[j];
        }

        for (double x : u)
            if (!std::isfinite(x)) throw std::runtime_error("sinkhorn_unbalanced: NaN/Inf scaling");
        for (double x : v)
            if (!std::isfinite(x)) throw std::runtime_error("sinkhorn_unbalanced: NaN/Inf scaling");

        double lumax = 0.0;
        for (double x : u) lumax = std::max(lumax, std::abs(std::log(x)));
        for (double x : v) lumax = std::max(lumax, std::abs(std::log(x)));
        if (lumax > 25.0) absorb();

        // The g iteration contracts geometrically (rate ~ tau/(tau+eps));
        // extrapolate the remaining tail when two consecutive steps agree.
        if (cfg.accelerate && quarantine == 0 && it % 12 == 0 && gchange > cfg.tol &&
            prev_gchange > 0.0 && std::isfinite(prev_gchange)) {
            double rho = gchange / prev_gchange;
            double dot = 0.0, n1 = 0.0, n2 = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                dot += dpsi[j] * dpsi_prev[j];
                n1 += dpsi[j] * dpsi[j];
                n2 += dpsi_prev[j] * dpsi_prev[j];
            }
            bool aligned = n1 > 0 && n2 > 0 && dot / std::sqrt(n1 * n2) > 0.999;
            if (aligned && rho > 0.05 && rho < 0.9995) {
                double factor = std::min(rho / (1.0 - rho), 500.0);
                absorb();
                for (std::size_t j = 0; j < m; ++j) g[j] += dpsi[j] * factor;
                for (std::size_t j = 0; j < m; ++j) psi[j] = g[j];
                rebuild();
                gchange = kInf;
                prev_gchange = kInf;
                quarantine = 2;
            }
        }
    }

    Mat pi(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) pi(i, j) = a[i] * b[j] * u[i] * v[j] * K0(i, j);
    if (!pi.all_finite()) throw std::runtime_error("sinkhorn_unbalanced: non-finite plan");

    TransportPlan plan = assemble_plan(std::move(pi));
    plan.converged = converged;
    plan.iterations = iters;

    SinkhornPotentials pot;
    pot.f.resize(n);
    pot.g.resize(m);
    for (std::size_t i = 0; i < n; ++i) pot.f[i] = f[i] + eps * std::log(u[i]);
    for (std::size_t j = 0; j < m; ++j) pot.g[j] = g[j] + eps * std::log(v[j]);
    return {std::move(plan), std::move(pot)};
}

double uot_objective(const CostMatrix& c, const Mat& pi, const std::vector<double>& a,
                     const std::vector<double>& b, const UotConfig& cfg) {
    if (pi.rows != a.size() || pi.cols != b.size())
        throw std::invalid_argument("uot_objective: shape mismatch");
    double transport = 0.0, ent = 0.0;
    std::vector<double> r(a.size(), 0.0), s(b.size(), 0.0);
    for (std::size_t i = 0; i < pi.rows; ++i)
        for (std::size_t j = 0; j < pi.cols; ++j) {
            double p = pi(i, j);
            double q = a[i] * b[j];
            transport += c.c(i, j) * p;
            if (p > 0.0) ent += p * std::log(p / q) - p + q;
            else ent += q;
            r[i] += p;
            s[j] += p;
        }
    double obj = transport + cfg.eps * ent + cfg.tau * kl_mass(s, b);
    if (!cfg.source_fixed) obj += cfg.tau * kl_mass(r, a);
    return obj;
}

TransportPlan uot_oracle_dense(const CostMatrix& c, const std::vector<double>& a,
                               const std::vector<double>& b, const UotConfig& cfg) {
    cfg.validate();
    check_marginals(c, a, b);
    const std::size_t n = a.size(), m = b.size();
    if (n > 8 || m > 8) throw std::invalid_argument("uot_oracle_dense: instance too large");

    Mat pi(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) pi(i, j) = a[i] * b[j];
    auto project_rows = [&](Mat& p) {
        for (std::size_t i = 0; i < n; ++i) {
            double r = 0.0;
            for (std::size_t j = 0; j < m; ++j) r += p(i, j);
            double scale = a[i] / r;
            for (std::size_t j = 0; j < m; ++j) p(i, j) *= scale;
        }
    };
    if (cfg.source_fixed) project_rows(pi);

    double best = uot_objective(c, pi, a, b, cfg);
    double eta = 0.25;
    Mat cand(n, m);
    std::vector<double> r(n), s(m);
    for (std::size_t iter = 0; iter < 2000000; ++iter) {
        std::fill(r.begin(), r.end(), 0.0);
        std::fill(s.begin(), s.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                r[i] += pi(i, j);
                s[j] += pi(i, j);
            }
        bool accepted = false;
        double improvement = 0.0;
        while (eta > 1e-14) {
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < m; ++j) {
                    double p = std::max(pi(i, j), 1e-300);
                    double grad = c.c(i, j) + cfg.eps * std::log(p / (a[i] * b[j])) +
                                  cfg.tau * std::log(std::max(s[j], 1e-300) / b[j]);
                    if (!cfg.source_fixed)
                        grad += cfg.tau * std::log(std::max(r[i], 1e-300) / a[i]);
                    double step = std::clamp(-eta * grad, -50.0, 50.0);
                    cand(i, j) = p * std::exp(step);
                }
            if (cfg.source_fixed) project_rows(cand);
            double fc = uot_objective(c, cand, a, b, cfg);
            if (fc <= best) {
                improvement = best - fc;
                best = fc;
                pi = cand;
                eta = std::min(eta * 1.25, 50.0);
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        if (!accepted) break;
        if (improvement < 1e-12 && eta >= 0.25) break;
    }
    return assemble_plan(std::move(pi));
}

TransportPlan emd_exact(const CostMatrix& c, const std::vector<double>& a,
                        const std::vector<double>& b) {
    const std::size_t n = a.size();
    if (b.size() != n || c.c.rows != n || c.c.cols != n)
        throw std::invalid_argument("emd_exact: square uniform instances only");
    for (std::size_t i = 0; i < n; ++i)
        if (std::abs(a[i] - 1.0 / n) > 1e-12 || std::abs(b[i] - 1.0 / n) > 1e-12)
            throw std::invalid_argument("emd_exact: marginals must be uniform");

    // Shortest augmenting path assignment (Jonker-Volgenant style), 1-based.
    std::vector<double> upot(n + 1, 0.0), vpot(n + 1, 0.0);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, kInf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            std::size_t i0 = p[j0], j1 = 0;
            double delta = kInf;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                double cur = c.c(i0 - 1, j - 1) - upot[i0] - vpot[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    upot[p[j]] += delta;
                    vpot[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    Mat pi(n, n, 0.0);
    for (std::size_t j = 1; j <= n; ++j) pi(p[j] - 1, j - 1) = 1.0 / n;
    return assemble_plan(std::move(pi));
}

MajorityScores majority_scores(const TransportPlan& plan) {
    MajorityScores out;
    const std::size_t m = plan.col_marginal.size();
    out.s.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
        double col = plan.col_marginal[j];
        if (!(col > 0.0)) throw std::domain_error("majority_scores: zero column mass");
        out.s[j] = static_cast<double>(m) * col;
    }
    return out;
}

std::vector<std::pair<std::size_t, std::size_t>> sample_pairs_rowwise(
    const TransportPlan& plan, RngState& rng) {
    const Mat& pi = plan.pi;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(pi.rows);
    for (std::size_t i = 0; i < pi.rows; ++i) {
        double rsum = plan.row_marginal[i];
        if (!(rsum > 0.0)) throw std::domain_error("sample_pairs_rowwise: zero row mass");
        double u = rng.uniform() * rsum;
        double acc = 0.0;
        std::size_t j = pi.cols - 1;
        for (std::size_t k = 0; k < pi.cols; ++k) {
            acc += pi(i, k);
            if (u < acc) {
                j = k;
                break;
            }
        }
        pairs.emplace_back(i, j);
    }
    return pairs;
}

std::vector<std::pair<std::size_t, std::size_t>> sample_pairs_joint(
    const TransportPlan& plan, std::size_t n, RngState& rng) {
    const Mat& pi = plan.pi;
    if (!(plan.total_mass > 0.0)) throw std::domain_error("sample_pairs_joint: zero total mass");
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        double u = rng.uniform() * plan.total_mass;
        double acc = 0.0;
        std::size_t flat = pi.size() - 1;
        for (std::size_t idx = 0; idx < pi.size(); ++idx) {
            acc += pi.data[idx];
            if (u < acc) {
                flat = idx;
                break;
            }
        }
        pairs.emplace_back(flat / pi.cols, flat % pi.cols);
    }
    return pairs;
}

void write_plan_csv(std::ostream& os, const TransportPlan& plan) {
    os << "i,j,mass\n";
    for (std::size_t i = 0; i < plan.pi.rows; ++i)
        for (std::size_t j = 0; j < plan.pi.cols; ++j)
            os << i << ',' << j << ',' << ioutil::fmt(plan.pi(i, j)) << '\n';
}

void write_scores_csv(std::ostream& os, const MajorityScores& scores) {
    os << "j,score\n";
    for (std::size_t j = 0; j < scores.s.size(); ++j)
        os << j << ',' << ioutil::fmt(scores.s[j]) << '\n';
}

}  // namespace uotflow::transport
