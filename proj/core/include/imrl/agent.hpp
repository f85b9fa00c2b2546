#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "imrl/causal.hpp"
#include "imrl/env.hpp"
#include "imrl/nn.hpp"
#include "imrl/rng.hpp"

namespace imrl::io {
struct BufferIo;
}

namespace imrl::agent {

using env::Transition;

enum class IntrinsicMode {
    Empowerment, // one-sample estimate log p_xi(a|s',s) - log pi(a|s)
    KlClosedForm // negated Gaussian KL between policy and inverse-dynamics heads
};

struct HyperParams {
    double gamma = 0.99;
    double lr = 3e-4; // shared by all five optimizers
    std::size_t buffer_capacity = 1000000;
    std::vector<int> hidden = {256, 256};
    nn::Activation activation = nn::Activation::Softplus;
    double beta = 0.05;            // intrinsic weight
    double alpha_r = 1.0;          // extrinsic reward weight
    double alpha_init = 1.0;       // initial entropy temperature
    double target_entropy = 0.0;   // 0 selects -action_dim
    bool tune_temperature = true;  // keep the alpha_T term in the policy loss
    double polyak = 0.005;
    int batch_size = 256;
    bool twin_q = false;
    IntrinsicMode intrinsic = IntrinsicMode::Empowerment;

    void validate() const;
};

struct AgentNets {
    nn::DenseNet q;        // (s + a) -> scalar
    nn::DenseNet q2;       // twin critic, only allocated when twin_q
    nn::DenseNet v;        // s -> scalar
    nn::DenseNet v_target; // Polyak-averaged copy of v
    nn::DenseNet pi;       // s -> (mean, log_std) over actions
    nn::DenseNet inv;      // (s + s') -> (mean, log_std) over actions
};

struct AgentState {
    HyperParams hp;
    int state_dim = 0;
    int action_dim = 0;
    AgentNets nets;
    nn::AdamState opt_q, opt_q2, opt_v, opt_pi, opt_inv;
    double log_alpha = 0.0;
    nn::AdamScalar opt_alpha;

    double alpha() const;
    double target_entropy() const;
    nn::SquashedGaussianHead policy_head(std::span<const double> flat_state) const;
    nn::SquashedGaussianHead inverse_head(std::span<const double> flat_state,
                                          std::span<const double> flat_next) const;
};

AgentState make_agent(int state_dim, int action_dim, const HyperParams& hp, RngStream& init_rng);

/// FIFO ring of transitions with cached flat state encodings.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    std::size_t size() const { return count_; }
    std::size_t capacity() const { return capacity_; }
    std::size_t total_pushed() const { return total_pushed_; }

    void push(Transition t);

    /// Index 0 is the oldest retained transition.
    const Transition& operator[](std::size_t i) const { return entry(i).tr; }
    const std::vector<double>& flat_s(std::size_t i) const { return entry(i).flat_s; }
    const std::vector<double>& flat_next(std::size_t i) const { return entry(i).flat_next; }

private:
    struct Entry {
        Transition tr;
        std::vector<double> flat_s, flat_next;
    };
    const Entry& entry(std::size_t i) const { return ring_[(head_ + i) % capacity_]; }

    std::vector<Entry> ring_;
    std::size_t capacity_;
    std::size_t head_ = 0;
    std::size_t count_ = 0;
    std::size_t total_pushed_ = 0;

    friend struct imrl::io::BufferIo;
};

/// One batch element; pointers refer into the buffer (or test-local storage).
struct Sample {
    const std::vector<double>* s = nullptr;
    const std::vector<double>* a = nullptr;
    double r = 0.0;
    const std::vector<double>* next = nullptr;
    bool done = false;
};
using Batch = std::vector<Sample>;

Batch sample_batch(const ReplayBuffer& buffer, int n, RngStream& rng);

// ---------------------------------------------------------------------------
// Losses. Each returns its value and the exact gradients of the mean-over-
// batch objective with respect to the net it trains; targets are constants.

struct CriticLoss {
    double loss = 0.0;
    nn::NetGrads grads;
    nn::NetGrads grads2; // twin critic, when enabled
};
CriticLoss loss_q(const AgentState& agent, const Batch& batch);

struct ValueLoss {
    double loss = 0.0;
    nn::NetGrads grads;
    double mean_g = 0.0;
};
ValueLoss loss_v(const AgentState& agent, const Batch& batch, RngStream& rng);

struct PolicyLoss {
    double loss = 0.0;
    nn::NetGrads grads;
};
PolicyLoss loss_pi(const AgentState& agent, const Batch& batch, RngStream& rng);

struct InverseLoss {
    double loss = 0.0;
    nn::NetGrads grads;
};
InverseLoss loss_inv(const AgentState& agent, const Batch& batch);

struct AlphaLoss {
    double loss = 0.0;
    double grad_log_alpha = 0.0;
    double mean_log_pi = 0.0;
};
AlphaLoss loss_alpha(const AgentState& agent, const Batch& batch, RngStream& rng);

enum class ActMode { Explore, Exploit };

std::vector<double> act(const AgentState& agent, std::span<const double> flat_state, ActMode mode,
                        RngStream& rng);

/// One-sample empowerment estimate log p_xi(a|s',s) - log pi_phi(a|s).
double intrinsic_g(const AgentState& agent, std::span<const double> flat_state,
                   std::span<const double> action, std::span<const double> flat_next);

/// Negated closed-form KL between the pre-squash policy and inverse-dynamics
/// Gaussians; the drop-in intrinsic of the KL ablation.
double kl_intrinsic(const AgentState& agent, std::span<const double> flat_state,
                    std::span<const double> flat_next);

void polyak_update(AgentState& agent);

struct LossReport {
    double j_q = 0.0, j_v = 0.0, j_pi = 0.0, j_p = 0.0, j_alpha = 0.0;
    double mean_g = 0.0;
    double alpha = 0.0;
};

/// One full gradient step: sequential updates of theta, psi, phi, xi, alpha,
/// then the Polyak target move. Throws TrainingAbort on a non-finite loss.
LossReport gradient_step(AgentState& agent, const Batch& batch, RngStream& rng);

// ---------------------------------------------------------------------------
// Training loop.

struct AugmentationSettings {
    bool enabled = false;
    causal::AugmentationConfig config;
    causal::DetectorKind detector = causal::DetectorKind::Heuristic;
    const env::RecEnv* oracle_env = nullptr; // schema owner for swap/check
    bool audit = false;
};

struct EpisodeReport {
    long episode = 0;
    double episode_return = 0.0;
    double ctr = 0.0;
    LossReport losses; // means over this episode's gradient steps
    std::size_t augmented = 0;
    double threshold = 0.0;
    long env_steps = 0; // cumulative
};

struct EvalReport {
    double ctr = 0.0;
    double mean_return = 0.0;
    std::uint64_t user_digest = 0; // hash of evaluated user profiles
};

class Trainer {
public:
    Trainer(env::Environment& environment, AgentState agent, AugmentationSettings aug,
            std::uint64_t seed);

    EpisodeReport run_episode(long episode_index);

    /// Deterministic-policy evaluation on a caller-provided environment.
    EvalReport evaluate(env::Environment& eval_env, int episodes) const;

    AgentState& agent() { return agent_; }
    const AgentState& agent() const { return agent_; }
    ReplayBuffer& buffer() { return buffer_; }
    const ReplayBuffer& buffer() const { return buffer_; }
    RngBundle& rngs() { return rngs_; }
    const AugmentationSettings& augmentation() const { return aug_; }
    long total_env_steps() const { return env_steps_; }
    void set_total_env_steps(long v) { env_steps_ = v; }
    std::size_t total_augmented() const { return total_augmented_; }
    void set_total_augmented(std::size_t v) { total_augmented_ = v; }
    std::vector<causal::AuditRow>& audit_log() { return audit_log_; }

private:
    env::Environment& env_;
    AgentState agent_;
    ReplayBuffer buffer_;
    AugmentationSettings aug_;
    RngBundle rngs_;
    long env_steps_ = 0;
    std::size_t total_augmented_ = 0;
    std::vector<causal::AuditRow> audit_log_;
};

} // namespace imrl::agent
