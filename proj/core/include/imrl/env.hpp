#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "imrl/graph.hpp"
#include "imrl/rng.hpp"

namespace imrl::env {

enum class InterestMode { InterestEvolution, StaticPref };

struct EnvConfig {
    int categories = 8;       // C
    int item_dim = 8;         // d_i, also the action dimension
    int demo_dim = 4;         // d_g
    int num_items = 64;
    int episode_length = 50;  // L
    double sharpness = 1.0;   // kappa, logit gain
    double base_offset = 0.0; // b0; negative makes clicks sparse
    double drift_rate = 0.1;  // eta in [0,1]
    double obs_noise_std = 0.05;
    InterestMode mode = InterestMode::InterestEvolution;
    double reward_max = 1.0;  // T_max; 1 for binary-click environments
    double boredom_scale = 0.5;
    double boredom_decay = 5.0;
    double demo_weight = 0.3;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Item {
    int id = 0;
    std::vector<double> features; // unit norm
    int category = 0;
};

struct ItemCatalog {
    std::vector<Item> items;
    int categories = 0;
    int feature_dim = 0;
};

struct UserProfile {
    std::vector<double> static_interest;  // unit norm
    std::vector<double> dynamic_interest; // unit norm, drifts on clicks
    std::vector<double> demographic;
};

struct CategorySlot {
    std::vector<double> features; // zero until the category is first recommended
    int feedback = 0;             // last click in this category
    int recency = 0;              // steps since this category was recommended

    bool operator==(const CategorySlot&) const = default;
};

/// Composed state: one slot per category plus demographic and a noisy
/// observation of the user's dynamic interest. Component count is C + 2.
struct FactoredState {
    std::vector<CategorySlot> slots;
    std::vector<double> demographic;
    std::vector<double> interest_obs;

    bool operator==(const FactoredState&) const = default;

    int component_count() const { return static_cast<int>(slots.size()) + 2; }
    int flat_dim() const;
    std::vector<double> flatten() const;
};

bool slot_is_empty(const FactoredState& s, int slot_index);

struct StepInfo {
    int item_id = -1;
    double true_click_prob = 0.0;
};

struct StepOutcome {
    FactoredState next_state;
    double reward = 0.0;
    bool done = false;
    StepInfo info;
};

/// One replay-buffer record.
struct Transition {
    FactoredState s;
    std::vector<double> a;
    double r = 0.0;
    FactoredState next;
    bool done = false;
};

struct TraceRow {
    int step = 0;
    int item_id = 0;
    int category = 0;
    int click = 0;
    double true_p = 0.0;
};

/// Minimal environment surface the training loop depends on.
class Environment {
public:
    virtual ~Environment() = default;
    virtual int state_dim() const = 0;
    virtual int action_dim() const = 0;
    virtual int episode_length() const = 0;
    virtual const FactoredState& reset() = 0;
    virtual StepOutcome step(std::span<const double> action) = 0;
    virtual const FactoredState& state() const = 0;
};

/// Simulated recommendation environment. A continuous action in (-1,1)^{d_i}
/// is mapped to the nearest catalog item by cosine similarity; the click is
/// Bernoulli in a logistic model of interest match, demographic affinity and
/// boredom of the matching category slot. Catalog and demographic mixing
/// weights derive from cfg.seed; per-run randomness comes from the run seed.
class RecEnv : public Environment {
public:
    explicit RecEnv(const EnvConfig& cfg, std::uint64_t run_seed = 0);

    int state_dim() const override { return state_.flat_dim(); }
    int action_dim() const override { return cfg_.item_dim; }
    int episode_length() const override { return cfg_.episode_length; }

    const FactoredState& reset() override;
    /// Reseeds the environment stream, then resets. Same (config, seed)
    /// always yields the same state.
    const FactoredState& reset_with_seed(std::uint64_t seed);

    StepOutcome step(std::span<const double> action) override;
    const FactoredState& state() const override { return state_; }

    // Pure views of the mechanism, used by the causal oracle and the tests.
    int nearest_item(std::span<const double> action) const;
    double true_click_prob(const FactoredState& s, std::span<const double> action) const;
    FactoredState deterministic_next(const FactoredState& s, std::span<const double> action,
                                     bool click) const;

    /// Local causal structure of one (state, action) pair. Nodes 0..C-1 are
    /// the category slots, then demographic, interest observation, action.
    /// Exactly the edges the step mechanism reads or writes.
    causal::AdjacencyMatrix ground_truth_mask(const FactoredState& s,
                                              std::span<const double> action) const;

    /// True iff every deterministic next-state component of the transition
    /// matches what the mechanism produces for (t.s, t.a).
    bool counterfactual_check(const Transition& t) const;

    int demographic_node() const { return cfg_.categories; }
    int interest_node() const { return cfg_.categories + 1; }
    int action_node() const { return cfg_.categories + 2; }

    const EnvConfig& config() const { return cfg_; }
    const ItemCatalog& catalog() const { return catalog_; }
    const UserProfile& user() const { return user_; }
    int steps_taken() const { return steps_; }

    RngStream& rng() { return rng_; }
    void set_rng(const RngStream& r) { rng_ = r; }

    /// Test hook for dependency probing of the latent interest.
    void set_dynamic_interest(std::span<const double> v);

private:
    void sample_user();
    std::vector<double> observe_interest();

    EnvConfig cfg_;
    ItemCatalog catalog_;
    std::vector<double> demo_mix_; // demo_dim x item_dim, row-major
    UserProfile user_;
    FactoredState state_;
    RngStream rng_;
    int steps_ = 0;
};

// ---------------------------------------------------------------------------
// Discrete testbed for the exact empowerment solver.

struct DiscreteMDP {
    int n_states = 0;
    int n_actions = 0;
    std::vector<double> p; // transition tensor, [s][a][s'] row-major

    double prob(int s, int a, int s2) const {
        return p[(static_cast<std::size_t>(s) * n_actions + a) * n_states + s2];
    }
    void validate() const;
};

enum class ToyMdpKind {
    Random, // row-stochastic Dirichlet-like rows
    Branch, // deterministic, action a moves s -> (s + a + 1) mod n
    Hub     // fixed 4-state, 3-action map with one high-control hub state
};

struct ToyMdpConfig {
    ToyMdpKind kind = ToyMdpKind::Random;
    int n_states = 4;
    int n_actions = 3;
    std::uint64_t seed = 0;
};

DiscreteMDP make_toy_mdp(const ToyMdpConfig& cfg);

} // namespace imrl::env
