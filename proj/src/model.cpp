#include "uotflow/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "uotflow/ioutil.hpp"

namespace uotflow::model {

TimeEmbedding::TimeEmbedding(std::size_t n, double f_min, double f_max) : n_freq(n) {
    freqs.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double e = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
        freqs[i] = f_min * std::pow(f_max / f_min, e);
    }
}

void TimeEmbedding::embed(double t, double* out) const {
    for (std::size_t i = 0; i < n_freq; ++i) {
        out[2 * i] = std::sin(freqs[i] * t);
        out[2 * i + 1] = std::cos(freqs[i] * t);
    }
}

std::size_t MlpVectorField::n_params() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < w.size(); ++l) n += w[l].size() + b[l].size();
    return n;
}

std::vector<double> MlpVectorField::flatten() const {
    std::vector<double> flat;
    flat.reserve(n_params());
    for (std::size_t l = 0; l < w.size(); ++l) {
        flat.insert(flat.end(), w[l].data.begin(), w[l].data.end());
        flat.insert(flat.end(), b[l].begin(), b[l].end());
    }
    return flat;
}

void MlpVectorField::unflatten(const std::vector<double>& flat) {
    if (flat.size() != n_params()) throw std::invalid_argument("unflatten: size mismatch");
    std::size_t pos = 0;
    for (std::size_t l = 0; l < w.size(); ++l) {
        std::copy(flat.begin() + pos, flat.begin() + pos + w[l].size(), w[l].data.begin());
        pos += w[l].size();
        std::copy(flat.begin() + pos, flat.begin() + pos + b[l].size(), b[l].begin());
        pos += b[l].size();
    }
}

MlpVectorField init_mlp(std::size_t d, const std::vector<std::size_t>& hidden, RngState& rng) {
    if (d < 1) throw std::invalid_argument("init_mlp: d must be >= 1");
    MlpVectorField net;
    net.d = d;
    net.hidden = hidden;
    std::vector<std::size_t> dims;
    dims.push_back(d + net.temb.dim());
    for (std::size_t h : hidden) dims.push_back(h);
    dims.push_back(d);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        Mat wl(dims[l], dims[l + 1]);
        double bound = 1.0 / std::sqrt(static_cast<double>(dims[l]));
        for (double& x : wl.data) x = (2.0 * rng.uniform() - 1.0) * bound;
        net.w.push_back(std::move(wl));
        net.b.emplace_back(dims[l + 1], 0.0);
    }
    return net;
}

void forward_batch(const MlpVectorField& net, const std::vector<double>& t, const Mat& x,
                   Mat& out, ForwardCache* cache) {
    const std::size_t n = x.rows;
    if (t.size() != n || x.cols != net.d) throw std::invalid_argument("forward_batch: shape");
    const std::size_t te = net.temb.dim();
    Mat input(n, net.d + te);
    for (std::size_t i = 0; i < n; ++i) {
        double* row = input.row_ptr(i);
        for (std::size_t j = 0; j < net.d; ++j) row[j] = x(i, j);
        net.temb.embed(t[i], row + net.d);
    }
    const std::size_t L = net.n_layers();
    Mat cur = numkit::matmul(input, net.w[0]);
    if (cache) {
        cache->input = std::move(input);
        cache->act.assign(L - 1, Mat());
    }
    for (std::size_t l = 0; l < L; ++l) {
        if (l > 0) cur = numkit::matmul(cur, net.w[l]);
        for (std::size_t i = 0; i < n; ++i) {
            double* row = cur.row_ptr(i);
            for (std::size_t j = 0; j < net.b[l].size(); ++j) row[j] += net.b[l][j];
        }
        if (l + 1 < L) {
            for (double& v : cur.data) v = std::tanh(v);
            if (cache) cache->act[l] = cur;
        }
    }
    out = std::move(cur);
}

std::vector<double> forward(const MlpVectorField& net, double t, const std::vector<double>& x) {
    Mat xm(1, net.d);
    std::copy(x.begin(), x.end(), xm.data.begin());
    Mat out;
    forward_batch(net, {t}, xm, out);
    return out.data;
}

void backward_batch(const MlpVectorField& net, const ForwardCache& cache, const Mat& upstream,
                    std::vector<double>* grad_flat, Mat* input_grad) {
    const std::size_t L = net.n_layers();
    const std::size_t n = upstream.rows;
    if (upstream.cols != net.d) throw std::invalid_argument("backward_batch: shape");
    if (grad_flat) grad_flat->assign(net.n_params(), 0.0);

    // Offsets of each layer's (w, b) block in the flat gradient.
    std::vector<std::size_t> w_off(L), b_off(L);
    {
        std::size_t pos = 0;
        for (std::size_t l = 0; l < L; ++l) {
            w_off[l] = pos;
            pos += net.w[l].size();
            b_off[l] = pos;
            pos += net.b[l].size();
        }
    }

    Mat delta = upstream;  // gradient at each layer's pre-bias output
    for (std::size_t l = L; l-- > 0;) {
        const Mat& in = l == 0 ? cache.input : cache.act[l - 1];
        if (grad_flat) {
            Mat gw = numkit::matmul_tn(in, delta);
            double* dst = grad_flat->data() + w_off[l];
            for (std::size_t k = 0; k < gw.size(); ++k) dst[k] += gw.data[k];
            double* db = grad_flat->data() + b_off[l];
            for (std::size_t i = 0; i < n; ++i) {
                const double* row = delta.row_ptr(i);
                for (std::size_t j = 0; j < delta.cols; ++j) db[j] += row[j];
            }
        }
        if (l == 0) {
            if (input_grad) {
                Mat gin = numkit::matmul_nt(delta, net.w[0]);
                *input_grad = Mat(n, net.d);
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < net.d; ++j) (*input_grad)(i, j) = gin(i, j);
            }
            break;
        }
        Mat prev = numkit::matmul_nt(delta, net.w[l]);
        const Mat& act = cache.act[l - 1];
        for (std::size_t k = 0; k < prev.size(); ++k)
            prev.data[k] *= 1.0 - act.data[k] * act.data[k];  // tanh'
        delta = std::move(prev);
    }
}

Mat jacobian_x(const MlpVectorField& net, double t, const std::vector<double>& x) {
    Mat xm(1, net.d);
    std::copy(x.begin(), x.end(), xm.data.begin());
    Mat out;
    ForwardCache cache;
    forward_batch(net, {t}, xm, out, &cache);
    Mat jac(net.d, net.d);
    for (std::size_t r = 0; r < net.d; ++r) {
        Mat up(1, net.d, 0.0);
        up(0, r) = 1.0;
        Mat ig;
        backward_batch(net, cache, up, nullptr, &ig);
        for (std::size_t c = 0; c < net.d; ++c) jac(r, c) = ig(0, c);
    }
    return jac;
}

std::vector<double> jacobian_trace_batch(const MlpVectorField& net, const std::vector<double>& t,
                                         const Mat& x) {
    Mat out;
    ForwardCache cache;
    forward_batch(net, t, x, out, &cache);
    std::vector<double> tr(x.rows, 0.0);
    for (std::size_t r = 0; r < net.d; ++r) {
        Mat up(x.rows, net.d, 0.0);
        for (std::size_t i = 0; i < x.rows; ++i) up(i, r) = 1.0;
        Mat ig;
        backward_batch(net, cache, up, nullptr, &ig);
        for (std::size_t i = 0; i < x.rows; ++i) tr[i] += ig(i, r);
    }
    return tr;
}

void adam_step(AdamState& state, std::vector<double>& params, std::vector<double>& grads) {
    if (params.size() != grads.size()) throw std::invalid_argument("adam_step: shape mismatch");
    if (state.m.empty()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    if (state.m.size() != params.size()) throw std::invalid_argument("adam_step: state mismatch");

    double norm_sq = 0.0;
    for (double g : grads) norm_sq += g * g;
    double norm = std::sqrt(norm_sq);
    if (state.clip_norm > 0.0 && norm > state.clip_norm) {
        double scale = state.clip_norm / norm;
        for (double& g : grads) g *= scale;
    }

    double lr = state.lr;
    if (state.warmup_steps > 0)
        lr *= std::min(1.0, static_cast<double>(state.step) /
                                static_cast<double>(state.warmup_steps));
    ++state.step;
    double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
        double mhat = state.m[i] / bc1;
        double vhat = state.v[i] / bc2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
}

void save_checkpoint(std::ostream& os, const MlpVectorField& net) {
    os << "uotflow-ckpt 1\n";
    os << "d " << net.d << "\nhidden";
    for (std::size_t h : net.hidden) os << ' ' << h;
    os << "\nn_freq " << net.temb.n_freq << "\nparams " << net.n_params() << "\n";
    for (double p : net.flatten()) os << ioutil::fmt(p) << '\n';
}

MlpVectorField load_checkpoint(std::istream& is) {
    std::string magic;
    int version = 0;
    is >> magic >> version;
    if (magic != "uotflow-ckpt" || version != 1)
        throw std::runtime_error("load_checkpoint: bad header");
    std::string key;
    std::size_t d = 0;
    is >> key >> d;
    if (key != "d") throw std::runtime_error("load_checkpoint: expected d");
    is >> key;
    if (key != "hidden") throw std::runtime_error("load_checkpoint: expected hidden");
    std::vector<std::size_t> hidden;
    std::string line;
    std::getline(is, line);
    {
        std::size_t pos = 0;
        while (pos < line.size()) {
            while (pos < line.size() && line[pos] == ' ') ++pos;
            if (pos >= line.size()) break;
            hidden.push_back(std::stoul(line.substr(pos)));
            while (pos < line.size() && line[pos] != ' ') ++pos;
        }
    }
    std::size_t n_freq = 0, n_params = 0;
    is >> key >> n_freq;
    if (key != "n_freq") throw std::runtime_error("load_checkpoint: expected n_freq");
    is >> key >> n_params;
    if (key != "params") throw std::runtime_error("load_checkpoint: expected params");

    RngState dummy(0);
    MlpVectorField net = init_mlp(d, hidden, dummy);
    if (net.temb.n_freq != n_freq) net.temb = TimeEmbedding(n_freq, 1.0, 1000.0);
    if (net.n_params() != n_params) throw std::runtime_error("load_checkpoint: param count");
    std::vector<double> flat(n_params);
    for (double& p : flat) {
        std::string tok;
        if (!(is >> tok)) throw std::runtime_error("load_checkpoint: truncated");
        p = std::strtod(tok.c_str(), nullptr);
    }
    net.unflatten(flat);
    return net;
}

}  // namespace uotflow::model
