#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "imrl/agent.hpp"
#include "imrl/env.hpp"
#include "imrl/rng.hpp"

namespace imrl::empower {

/// Discrete memoryless channel p(s'|a): rows are actions, columns successor
/// states, each row a probability distribution.
struct Channel {
    int n_actions = 0;
    int n_outcomes = 0;
    std::vector<double> p; // row-major

    double at(int a, int j) const { return p[static_cast<std::size_t>(a) * n_outcomes + j]; }
    void validate() const;

    static Channel from_mdp_state(const env::DiscreteMDP& mdp, int state);
};

struct EmpowermentResult {
    double capacity = 0.0;          // nats
    std::vector<double> policy;     // capacity-achieving action distribution
    int iterations = 0;
};

class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, EmpowermentResult last)
        : std::runtime_error(what), last_iterate(std::move(last)) {}

    EmpowermentResult last_iterate;
};

/// Alternating-maximization channel capacity. Alternates the posterior
/// p(a|s') implied by the current policy with the policy reweighting until
/// the capacity estimate changes by less than `tol`. Capacity estimates are
/// appended to `capacity_trace` when provided.
EmpowermentResult blahut_arimoto(const Channel& channel, double tol = 1e-9, int max_iter = 10000,
                                 std::vector<double>* capacity_trace = nullptr);

/// One-step empowerment of every state: capacity of its action->successor channel.
std::vector<double> exact_empowerment_map(const env::DiscreteMDP& mdp, double tol = 1e-9,
                                          int max_iter = 10000);

/// Average ranks (ties averaged), 1-based.
std::vector<double> rank_with_ties(std::span<const double> values);

/// Spearman rank correlation; throws UndefinedCorrelation on zero rank variance.
double spearman(std::span<const double> x, std::span<const double> y);

/// Continuous embedding of a discrete MDP: the observation is a one-hot
/// state vector, a 2-d action in (-1,1)^2 selects a discrete action by its
/// angle sector, rewards are zero. Used to validate the learned intrinsic
/// signal against exact empowerment.
class EmbeddedMdpEnv : public env::Environment {
public:
    EmbeddedMdpEnv(env::DiscreteMDP mdp, int episode_length, std::uint64_t run_seed);

    int state_dim() const override { return mdp_.n_states; }
    int action_dim() const override { return 2; }
    int episode_length() const override { return episode_length_; }
    const env::FactoredState& reset() override;
    env::StepOutcome step(std::span<const double> action) override;
    const env::FactoredState& state() const override { return state_; }

    int discretize(std::span<const double> action) const;
    env::FactoredState encode(int discrete_state) const;
    int discrete_state() const { return discrete_; }
    const env::DiscreteMDP& mdp() const { return mdp_; }
    RngStream& rng() { return rng_; }

private:
    env::DiscreteMDP mdp_;
    int episode_length_;
    RngStream rng_;
    env::FactoredState state_;
    int discrete_ = 0;
    int steps_ = 0;
};

struct StateCorrelation {
    int state = 0;
    double exact_capacity = 0.0;
    double mean_g = 0.0;
};

struct CorrelationReport {
    std::vector<StateCorrelation> rows;
    double rho = 0.0;
};

/// Spearman correlation between the per-state mean learned intrinsic signal
/// (actions sampled under the agent's policy, successors from the MDP) and
/// the exact empowerment map.
CorrelationReport estimator_correlation(const agent::AgentState& agent_state,
                                        const EmbeddedMdpEnv& embedded, int n_samples,
                                        RngStream& rng);

} // namespace imrl::empower
