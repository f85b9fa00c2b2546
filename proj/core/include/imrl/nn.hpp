#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "imrl/rng.hpp"

namespace imrl::nn {

enum class Activation { Softplus, Relu };

/// Fully-connected feed-forward net. Hidden layers use the rectifier-family
/// activation in `hidden_act`; the output layer is identity. Weight matrix
/// w[l] has shape sizes[l+1] x sizes[l], stored row-major.
struct DenseNet {
    std::vector<int> sizes;
    Activation hidden_act = Activation::Softplus;
    std::vector<std::vector<double>> w;
    std::vector<std::vector<double>> b;

    int input_dim() const { return sizes.front(); }
    int output_dim() const { return sizes.back(); }
    int num_layers() const { return static_cast<int>(sizes.size()) - 1; }
    std::size_t param_count() const;
};

/// Gradient accumulator shaped like a DenseNet's parameters.
struct NetGrads {
    std::vector<std::vector<double>> w;
    std::vector<std::vector<double>> b;

    void zero();
    void add_scaled(const NetGrads& other, double scale);
};

struct ForwardTrace {
    std::vector<std::vector<double>> act; // act[0] = input, act[L] = output
    std::vector<std::vector<double>> pre; // pre-activations per layer
};

DenseNet make_net(const std::vector<int>& sizes, Activation act = Activation::Softplus);

/// Uniform +-1/sqrt(fan_in) weights, zero biases.
void init_uniform(DenseNet& net, RngStream& rng);

NetGrads make_grads(const DenseNet& net);

std::vector<double> forward(const DenseNet& net, std::span<const double> x);
std::vector<double> forward_traced(const DenseNet& net, std::span<const double> x,
                                   ForwardTrace& trace);

/// Reverse-mode gradients of <upstream, f(x)> accumulated into `grads`.
/// `trace` must come from forward_traced on the same net and input.
/// If `input_grad` is non-null, d<upstream,f>/dx is written there.
void backward(const DenseNet& net, const ForwardTrace& trace,
              std::span<const double> upstream, NetGrads& grads,
              std::vector<double>* input_grad = nullptr);

/// One-shot variant: runs its own forward pass.
struct BackwardResult {
    NetGrads grads;
    std::vector<double> input_grad;
};
BackwardResult backward(const DenseNet& net, std::span<const double> x,
                        std::span<const double> upstream);

// Flat parameter views, used by serialization and the finite-difference
// suites. Order: per layer, weights row-major then biases.
std::vector<double> flatten_params(const DenseNet& net);
void set_params(DenseNet& net, std::span<const double> flat);
std::vector<double> flatten_grads(const DenseNet& net, const NetGrads& grads);

/// Adaptive-moment optimizer state, shape-congruent with one DenseNet.
struct AdamState {
    std::vector<std::vector<double>> mw, vw, mb, vb;
    long step = 0;
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

AdamState make_adam(const DenseNet& net, double lr);
void adam_update(DenseNet& net, const NetGrads& grads, AdamState& state);

/// Scalar Adam for single learned values (the entropy temperature).
struct AdamScalar {
    double m = 0.0, v = 0.0;
    long step = 0;
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};
void adam_update(double& param, double grad, AdamScalar& state);

// ---------------------------------------------------------------------------
// Squashed-Gaussian policy head: action = tanh(mean + exp(log_std) * noise).

constexpr double kLogStdMin = -20.0;
constexpr double kLogStdMax = 2.0;
constexpr double kTanhEps = 1e-6;

struct SquashedGaussianHead {
    std::vector<double> mean;
    std::vector<double> log_std;          // clamped into [kLogStdMin, kLogStdMax]
    std::vector<std::uint8_t> clamp_open; // 1 where the raw value was inside the range

    int dim() const { return static_cast<int>(mean.size()); }
};

/// Splits a net output (first half means, second half raw log-stds) into a head.
SquashedGaussianHead head_from_raw(std::span<const double> raw);

struct SquashedSample {
    std::vector<double> action;
    std::vector<double> pre_squash;
    double log_prob = 0.0;
};

/// Draws action = tanh(mean + sigma * noise) for caller-provided standard
/// normal noise and returns the change-of-variables log density.
SquashedSample sample_squashed(const SquashedGaussianHead& head,
                               std::span<const double> noise);

/// Log density of a given action in (-1,1)^d under the head.
double squashed_log_prob(const SquashedGaussianHead& head, std::span<const double> action);

/// Partial derivatives of squashed_log_prob at a fixed action.
struct DensityGrads {
    std::vector<double> d_mean;
    std::vector<double> d_log_std; // already masked by clamp_open
    std::vector<double> d_action;
};
DensityGrads squashed_log_prob_grads(const SquashedGaussianHead& head,
                                     std::span<const double> action);

/// Reparameterized-path derivatives at a sample (noise held fixed): how the
/// action and its own log density move with the head parameters.
struct ReparamGrads {
    std::vector<double> da_dmean;     // per-dim, diagonal Jacobian
    std::vector<double> da_dlogstd;
    std::vector<double> dlp_dmean;    // total derivative of log_prob
    std::vector<double> dlp_dlogstd;  // masked by clamp_open
};
ReparamGrads reparam_grads(const SquashedGaussianHead& head, const SquashedSample& sample);

/// Closed-form KL(N(m1,s1) || N(m2,s2)) between the pre-squash Gaussians,
/// summed over dimensions.
double gaussian_kl(const SquashedGaussianHead& lhs, const SquashedGaussianHead& rhs);

/// d KL / d (lhs.mean, lhs.log_std), masked by lhs.clamp_open.
struct KlGrads {
    std::vector<double> d_mean;
    std::vector<double> d_log_std;
};
KlGrads gaussian_kl_grads(const SquashedGaussianHead& lhs, const SquashedGaussianHead& rhs);

} // namespace imrl::nn
