#include "imrl/nn.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "imrl/errors.hpp"

namespace imrl::nn {

namespace {

constexpr double kLn2Pi = 1.8378770664093453; // ln(2*pi)

double activate(Activation a, double x) {
    if (a == Activation::Relu) return x > 0.0 ? x : 0.0;
    // softplus, stable at both tails
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

double activate_deriv(Activation a, double x) {
    if (a == Activation::Relu) return x > 0.0 ? 1.0 : 0.0;
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

void check_dim(std::size_t got, std::size_t want, const char* where) {
    if (got != want) {
        throw InvalidInput(std::string(where) + ": dimension mismatch, got " +
                           std::to_string(got) + ", want " + std::to_string(want));
    }
}

} // namespace

std::size_t DenseNet::param_count() const {
    std::size_t n = 0;
    for (int l = 0; l + 1 < static_cast<int>(sizes.size()); ++l) {
        n += static_cast<std::size_t>(sizes[l] + 1) * static_cast<std::size_t>(sizes[l + 1]);
    }
    return n;
}

void NetGrads::zero() {
    for (auto& layer : w) std::fill(layer.begin(), layer.end(), 0.0);
    for (auto& layer : b) std::fill(layer.begin(), layer.end(), 0.0);
}

void NetGrads::add_scaled(const NetGrads& other, double scale) {
    for (std::size_t l = 0; l < w.size(); ++l) {
        for (std::size_t i = 0; i < w[l].size(); ++i) w[l][i] += scale * other.w[l][i];
        for (std::size_t i = 0; i < b[l].size(); ++i) b[l][i] += scale * other.b[l][i];
    }
}

DenseNet make_net(const std::vector<int>& sizes, Activation act) {
    if (sizes.size() < 2) throw InvalidInput("make_net: need at least input and output layer");
    for (int s : sizes) {
        if (s <= 0) throw InvalidInput("make_net: layer sizes must be positive");
    }
    DenseNet net;
    net.sizes = sizes;
    net.hidden_act = act;
    net.w.resize(sizes.size() - 1);
    net.b.resize(sizes.size() - 1);
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        net.w[l].assign(static_cast<std::size_t>(sizes[l]) * sizes[l + 1], 0.0);
        net.b[l].assign(sizes[l + 1], 0.0);
    }
    return net;
}

void init_uniform(DenseNet& net, RngStream& rng) {
    for (std::size_t l = 0; l < net.w.size(); ++l) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(net.sizes[l]));
        for (double& v : net.w[l]) v = (2.0 * rng.uniform() - 1.0) * bound;
        std::fill(net.b[l].begin(), net.b[l].end(), 0.0);
    }
}

NetGrads make_grads(const DenseNet& net) {
    NetGrads g;
    g.w.resize(net.w.size());
    g.b.resize(net.b.size());
    for (std::size_t l = 0; l < net.w.size(); ++l) {
        g.w[l].assign(net.w[l].size(), 0.0);
        g.b[l].assign(net.b[l].size(), 0.0);
    }
    return g;
}

std::vector<double> forward(const DenseNet& net, std::span<const double> x) {
    ForwardTrace trace;
    return forward_traced(net, x, trace);
}

std::vector<double> forward_traced(const DenseNet& net, std::span<const double> x,
                                   ForwardTrace& trace) {
    check_dim(x.size(), static_cast<std::size_t>(net.sizes.front()), "forward");
    const int L = net.num_layers();
    trace.act.assign(L + 1, {});
    trace.pre.assign(L, {});
    trace.act[0].assign(x.begin(), x.end());
    for (int l = 0; l < L; ++l) {
        const int n_in = net.sizes[l];
        const int n_out = net.sizes[l + 1];
        const auto& in = trace.act[l];
        auto& z = trace.pre[l];
        z.assign(n_out, 0.0);
        const double* wl = net.w[l].data();
        for (int o = 0; o < n_out; ++o) {
            double acc = net.b[l][o];
            const double* row = wl + static_cast<std::size_t>(o) * n_in;
            for (int i = 0; i < n_in; ++i) acc += row[i] * in[i];
            z[o] = acc;
        }
        auto& out = trace.act[l + 1];
        out.resize(n_out);
        if (l == L - 1) {
            out = z;
        } else {
            for (int o = 0; o < n_out; ++o) out[o] = activate(net.hidden_act, z[o]);
        }
    }
    return trace.act.back();
}

void backward(const DenseNet& net, const ForwardTrace& trace,
              std::span<const double> upstream, NetGrads& grads,
              std::vector<double>* input_grad) {
    check_dim(upstream.size(), static_cast<std::size_t>(net.sizes.back()), "backward");
    const int L = net.num_layers();
    std::vector<double> delta(upstream.begin(), upstream.end());
    std::vector<double> next_delta;
    for (int l = L - 1; l >= 0; --l) {
        const int n_in = net.sizes[l];
        const int n_out = net.sizes[l + 1];
        if (l < L - 1) {
            for (int o = 0; o < n_out; ++o) {
                delta[o] *= activate_deriv(net.hidden_act, trace.pre[l][o]);
            }
        }
        const auto& in = trace.act[l];
        double* gw = grads.w[l].data();
        for (int o = 0; o < n_out; ++o) {
            const double d = delta[o];
            grads.b[l][o] += d;
            double* row = gw + static_cast<std::size_t>(o) * n_in;
            for (int i = 0; i < n_in; ++i) row[i] += d * in[i];
        }
        if (l > 0 || input_grad != nullptr) {
            next_delta.assign(n_in, 0.0);
            const double* wl = net.w[l].data();
            for (int o = 0; o < n_out; ++o) {
                const double d = delta[o];
                const double* row = wl + static_cast<std::size_t>(o) * n_in;
                for (int i = 0; i < n_in; ++i) next_delta[i] += d * row[i];
            }
            delta = next_delta;
        }
    }
    if (input_grad != nullptr) *input_grad = delta;
}

BackwardResult backward(const DenseNet& net, std::span<const double> x,
                        std::span<const double> upstream) {
    BackwardResult result;
    result.grads = make_grads(net);
    ForwardTrace trace;
    forward_traced(net, x, trace);
    backward(net, trace, upstream, result.grads, &result.input_grad);
    return result;
}

std::vector<double> flatten_params(const DenseNet& net) {
    std::vector<double> flat;
    flat.reserve(net.param_count());
    for (std::size_t l = 0; l < net.w.size(); ++l) {
        flat.insert(flat.end(), net.w[l].begin(), net.w[l].end());
        flat.insert(flat.end(), net.b[l].begin(), net.b[l].end());
    }
    return flat;
}

void set_params(DenseNet& net, std::span<const double> flat) {
    check_dim(flat.size(), net.param_count(), "set_params");
    std::size_t pos = 0;
    for (std::size_t l = 0; l < net.w.size(); ++l) {
        std::memcpy(net.w[l].data(), flat.data() + pos, net.w[l].size() * sizeof(double));
        pos += net.w[l].size();
        std::memcpy(net.b[l].data(), flat.data() + pos, net.b[l].size() * sizeof(double));
        pos += net.b[l].size();
    }
}

std::vector<double> flatten_grads(const DenseNet& net, const NetGrads& grads) {
    std::vector<double> flat;
    flat.reserve(net.param_count());
    for (std::size_t l = 0; l < grads.w.size(); ++l) {
        flat.insert(flat.end(), grads.w[l].begin(), grads.w[l].end());
        flat.insert(flat.end(), grads.b[l].begin(), grads.b[l].end());
    }
    return flat;
}

AdamState make_adam(const DenseNet& net, double lr) {
    AdamState s;
    s.lr = lr;
    s.mw.resize(net.w.size());
    s.vw.resize(net.w.size());
    s.mb.resize(net.b.size());
    s.vb.resize(net.b.size());
    for (std::size_t l = 0; l < net.w.size(); ++l) {
        s.mw[l].assign(net.w[l].size(), 0.0);
        s.vw[l].assign(net.w[l].size(), 0.0);
        s.mb[l].assign(net.b[l].size(), 0.0);
        s.vb[l].assign(net.b[l].size(), 0.0);
    }
    return s;
}

namespace {

void adam_apply(double* p, const double* g, double* m, double* v, std::size_t n,
                const AdamState& s, double bc1, double bc2) {
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g[i];
        v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p[i] -= s.lr * mhat / (std::sqrt(vhat) + s.eps);
    }
}

} // namespace

void adam_update(DenseNet& net, const NetGrads& grads, AdamState& state) {
    for (std::size_t l = 0; l < grads.w.size(); ++l) {
        for (double g : grads.w[l]) {
            if (!std::isfinite(g)) throw TrainingAbort("adam_update: non-finite weight gradient");
        }
        for (double g : grads.b[l]) {
            if (!std::isfinite(g)) throw TrainingAbort("adam_update: non-finite bias gradient");
        }
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t l = 0; l < net.w.size(); ++l) {
        adam_apply(net.w[l].data(), grads.w[l].data(), state.mw[l].data(), state.vw[l].data(),
                   net.w[l].size(), state, bc1, bc2);
        adam_apply(net.b[l].data(), grads.b[l].data(), state.mb[l].data(), state.vb[l].data(),
                   net.b[l].size(), state, bc1, bc2);
    }
}

void adam_update(double& param, double grad, AdamScalar& state) {
    if (!std::isfinite(grad)) throw TrainingAbort("adam_update: non-finite scalar gradient");
    state.step += 1;
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad;
    const double mhat = state.m / (1.0 - std::pow(state.beta1, static_cast<double>(state.step)));
    const double vhat = state.v / (1.0 - std::pow(state.beta2, static_cast<double>(state.step)));
    param -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
}

// ---------------------------------------------------------------------------

SquashedGaussianHead head_from_raw(std::span<const double> raw) {
    if (raw.size() % 2 != 0) throw InvalidInput("head_from_raw: raw output must have even length");
    const int d = static_cast<int>(raw.size() / 2);
    SquashedGaussianHead h;
    h.mean.assign(raw.begin(), raw.begin() + d);
    h.log_std.resize(d);
    h.clamp_open.resize(d);
    for (int i = 0; i < d; ++i) {
        const double v = raw[d + i];
        h.log_std[i] = std::min(std::max(v, kLogStdMin), kLogStdMax);
        h.clamp_open[i] = (v > kLogStdMin && v < kLogStdMax) ? 1 : 0;
    }
    return h;
}

SquashedSample sample_squashed(const SquashedGaussianHead& head, std::span<const double> noise) {
    check_dim(noise.size(), head.mean.size(), "sample_squashed");
    const int d = head.dim();
    SquashedSample s;
    s.action.resize(d);
    s.pre_squash.resize(d);
    double lp = 0.0;
    for (int i = 0; i < d; ++i) {
        const double sigma = std::exp(head.log_std[i]);
        const double u = head.mean[i] + sigma * noise[i];
        const double a = std::tanh(u);
        s.pre_squash[i] = u;
        s.action[i] = a;
        lp += -0.5 * kLn2Pi - head.log_std[i] - 0.5 * noise[i] * noise[i];
        lp -= std::log(1.0 - a * a + kTanhEps);
    }
    s.log_prob = lp;
    return s;
}

double squashed_log_prob(const SquashedGaussianHead& head, std::span<const double> action) {
    check_dim(action.size(), head.mean.size(), "squashed_log_prob");
    const int d = head.dim();
    double lp = 0.0;
    for (int i = 0; i < d; ++i) {
        const double a = std::min(std::max(action[i], -1.0 + 1e-12), 1.0 - 1e-12);
        const double u = std::atanh(a);
        const double sigma = std::exp(head.log_std[i]);
        const double z = (u - head.mean[i]) / sigma;
        lp += -0.5 * kLn2Pi - head.log_std[i] - 0.5 * z * z;
        lp -= std::log(1.0 - a * a + kTanhEps);
    }
    return lp;
}

DensityGrads squashed_log_prob_grads(const SquashedGaussianHead& head,
                                     std::span<const double> action) {
    check_dim(action.size(), head.mean.size(), "squashed_log_prob_grads");
    const int d = head.dim();
    DensityGrads g;
    g.d_mean.resize(d);
    g.d_log_std.resize(d);
    g.d_action.resize(d);
    for (int i = 0; i < d; ++i) {
        const double a = std::min(std::max(action[i], -1.0 + 1e-12), 1.0 - 1e-12);
        const double u = std::atanh(a);
        const double sigma = std::exp(head.log_std[i]);
        const double z = (u - head.mean[i]) / sigma;
        g.d_mean[i] = z / sigma;
        g.d_log_std[i] = head.clamp_open[i] ? (z * z - 1.0) : 0.0;
        g.d_action[i] = -(z / sigma) / (1.0 - a * a) + 2.0 * a / (1.0 - a * a + kTanhEps);
    }
    return g;
}

ReparamGrads reparam_grads(const SquashedGaussianHead& head, const SquashedSample& sample) {
    const int d = head.dim();
    ReparamGrads g;
    g.da_dmean.resize(d);
    g.da_dlogstd.resize(d);
    g.dlp_dmean.resize(d);
    g.dlp_dlogstd.resize(d);
    for (int i = 0; i < d; ++i) {
        const double a = sample.action[i];
        const double sigma = std::exp(head.log_std[i]);
        const double sech2 = 1.0 - a * a; // d tanh(u) / du
        const double noise = (sample.pre_squash[i] - head.mean[i]) / sigma;
        const double da_du = sech2;
        const double tanh_term = 2.0 * a * sech2 / (sech2 + kTanhEps);
        g.da_dmean[i] = da_du;
        g.da_dlogstd[i] = head.clamp_open[i] ? da_du * sigma * noise : 0.0;
        g.dlp_dmean[i] = tanh_term;
        g.dlp_dlogstd[i] = head.clamp_open[i] ? (-1.0 + tanh_term * sigma * noise) : 0.0;
    }
    return g;
}

double gaussian_kl(const SquashedGaussianHead& lhs, const SquashedGaussianHead& rhs) {
    check_dim(rhs.mean.size(), lhs.mean.size(), "gaussian_kl");
    double kl = 0.0;
    for (int i = 0; i < lhs.dim(); ++i) {
        const double s1 = std::exp(lhs.log_std[i]);
        const double s2 = std::exp(rhs.log_std[i]);
        const double dm = lhs.mean[i] - rhs.mean[i];
        kl += rhs.log_std[i] - lhs.log_std[i] + (s1 * s1 + dm * dm) / (2.0 * s2 * s2) - 0.5;
    }
    return kl;
}

KlGrads gaussian_kl_grads(const SquashedGaussianHead& lhs, const SquashedGaussianHead& rhs) {
    check_dim(rhs.mean.size(), lhs.mean.size(), "gaussian_kl_grads");
    const int d = lhs.dim();
    KlGrads g;
    g.d_mean.resize(d);
    g.d_log_std.resize(d);
    for (int i = 0; i < d; ++i) {
        const double s1 = std::exp(lhs.log_std[i]);
        const double s2 = std::exp(rhs.log_std[i]);
        const double dm = lhs.mean[i] - rhs.mean[i];
        g.d_mean[i] = dm / (s2 * s2);
        g.d_log_std[i] = lhs.clamp_open[i] ? (s1 * s1 / (s2 * s2) - 1.0) : 0.0;
    }
    return g;
}

} // namespace imrl::nn
