#include "imrl/env.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "imrl/errors.hpp"

namespace imrl::env {

namespace {

constexpr double kRecencyScale = 5.0; // flatten() encodes recency as exp(-r/5)

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

void normalize(std::vector<double>& v) {
    double n = std::sqrt(dot(v, v));
    if (n == 0.0) {
        v[0] = 1.0;
        return;
    }
    for (double& x : v) x /= n;
}

std::vector<double> random_unit(RngStream& rng, int dim) {
    std::vector<double> v(dim);
    for (double& x : v) x = rng.normal();
    normalize(v);
    return v;
}

} // namespace

void EnvConfig::validate() const {
    if (categories < 1) throw InvalidInput("EnvConfig: categories must be >= 1");
    if (item_dim < 1 || demo_dim < 0) throw InvalidInput("EnvConfig: bad dimensions");
    if (num_items < categories) throw InvalidInput("EnvConfig: need at least one item per category");
    if (episode_length < 1) throw InvalidInput("EnvConfig: episode_length must be >= 1");
    if (drift_rate < 0.0 || drift_rate > 1.0) throw InvalidInput("EnvConfig: drift_rate outside [0,1]");
    if (reward_max != 1.0) throw InvalidInput("EnvConfig: reward_max must be 1 for binary-click environments");
    if (obs_noise_std < 0.0) throw InvalidInput("EnvConfig: negative obs_noise_std");
}

int FactoredState::flat_dim() const {
    const int d_i = slots.empty() ? 0 : static_cast<int>(slots.front().features.size());
    return static_cast<int>(slots.size()) * (d_i + 2) + static_cast<int>(demographic.size()) +
           static_cast<int>(interest_obs.size());
}

std::vector<double> FactoredState::flatten() const {
    std::vector<double> flat;
    flat.reserve(flat_dim());
    for (const auto& slot : slots) {
        flat.insert(flat.end(), slot.features.begin(), slot.features.end());
        flat.push_back(static_cast<double>(slot.feedback));
        flat.push_back(std::exp(-static_cast<double>(slot.recency) / kRecencyScale));
    }
    flat.insert(flat.end(), demographic.begin(), demographic.end());
    flat.insert(flat.end(), interest_obs.begin(), interest_obs.end());
    return flat;
}

bool slot_is_empty(const FactoredState& s, int slot_index) {
    const auto& f = s.slots[slot_index].features;
    return std::all_of(f.begin(), f.end(), [](double x) { return x == 0.0; });
}

RecEnv::RecEnv(const EnvConfig& cfg, std::uint64_t run_seed)
    : cfg_(cfg), rng_(run_seed, "env") {
    cfg_.validate();

    // Catalog and demographic mixing are environment statics tied to cfg.seed.
    RngStream statics(cfg_.seed, "env-statics");
    catalog_.categories = cfg_.categories;
    catalog_.feature_dim = cfg_.item_dim;
    std::vector<std::vector<double>> centroids(cfg_.categories);
    for (auto& c : centroids) c = random_unit(statics, cfg_.item_dim);
    catalog_.items.resize(cfg_.num_items);
    for (int i = 0; i < cfg_.num_items; ++i) {
        Item& item = catalog_.items[i];
        item.id = i;
        item.category = i % cfg_.categories;
        item.features.resize(cfg_.item_dim);
        for (int d = 0; d < cfg_.item_dim; ++d) {
            item.features[d] = centroids[item.category][d] + 0.5 * statics.normal();
        }
        normalize(item.features);
    }
    demo_mix_.resize(static_cast<std::size_t>(cfg_.demo_dim) * cfg_.item_dim);
    const double scale = cfg_.demo_dim > 0 ? 1.0 / std::sqrt(static_cast<double>(cfg_.demo_dim)) : 0.0;
    for (double& x : demo_mix_) x = scale * statics.normal();

    reset();
}

void RecEnv::sample_user() {
    user_.static_interest = random_unit(rng_, cfg_.item_dim);
    user_.dynamic_interest = user_.static_interest;
    user_.demographic.resize(cfg_.demo_dim);
    for (double& x : user_.demographic) x = rng_.normal();
}

std::vector<double> RecEnv::observe_interest() {
    std::vector<double> obs(cfg_.item_dim);
    for (int d = 0; d < cfg_.item_dim; ++d) {
        obs[d] = user_.dynamic_interest[d] + cfg_.obs_noise_std * rng_.normal();
    }
    return obs;
}

const FactoredState& RecEnv::reset() {
    sample_user();
    state_.slots.assign(cfg_.categories, CategorySlot{std::vector<double>(cfg_.item_dim, 0.0), 0, 0});
    state_.demographic = user_.demographic;
    state_.interest_obs = observe_interest();
    steps_ = 0;
    return state_;
}

const FactoredState& RecEnv::reset_with_seed(std::uint64_t seed) {
    rng_ = RngStream(seed, "env");
    return reset();
}

int RecEnv::nearest_item(std::span<const double> action) const {
    if (action.size() != static_cast<std::size_t>(cfg_.item_dim)) {
        throw InvalidInput("RecEnv: action dimension mismatch");
    }
    // Features are unit norm, so cosine order equals dot-product order.
    int best = 0;
    double best_dot = dot(action, catalog_.items[0].features);
    for (int i = 1; i < cfg_.num_items; ++i) {
        const double d = dot(action, catalog_.items[i].features);
        if (d > best_dot) {
            best_dot = d;
            best = i;
        }
    }
    return best;
}

double RecEnv::true_click_prob(const FactoredState& s, std::span<const double> action) const {
    const Item& item = catalog_.items[nearest_item(action)];
    const int c = item.category;
    double score = dot(user_.dynamic_interest, item.features);
    if (cfg_.demo_dim > 0) {
        double affinity = 0.0;
        for (int g = 0; g < cfg_.demo_dim; ++g) {
            const double* row = demo_mix_.data() + static_cast<std::size_t>(g) * cfg_.item_dim;
            affinity += s.demographic[g] * dot(std::span<const double>(row, cfg_.item_dim), item.features);
        }
        score += cfg_.demo_weight * affinity;
    }
    score -= cfg_.boredom_scale * std::exp(-static_cast<double>(s.slots[c].recency) / cfg_.boredom_decay);
    return logistic(cfg_.sharpness * score + cfg_.base_offset);
}

FactoredState RecEnv::deterministic_next(const FactoredState& s, std::span<const double> action,
                                         bool click) const {
    const Item& item = catalog_.items[nearest_item(action)];
    FactoredState next = s;
    for (int c = 0; c < cfg_.categories; ++c) {
        if (c == item.category) {
            next.slots[c].features = item.features;
            next.slots[c].feedback = click ? 1 : 0;
            next.slots[c].recency = 0;
        } else {
            next.slots[c].recency = s.slots[c].recency + 1;
        }
    }
    return next;
}

StepOutcome RecEnv::step(std::span<const double> action) {
    const double p = true_click_prob(state_, action);
    const bool click = rng_.bernoulli(p);
    const Item& item = catalog_.items[nearest_item(action)];

    FactoredState next = deterministic_next(state_, action, click);
    if (cfg_.mode == InterestMode::InterestEvolution && click && cfg_.drift_rate > 0.0) {
        for (int d = 0; d < cfg_.item_dim; ++d) {
            user_.dynamic_interest[d] =
                (1.0 - cfg_.drift_rate) * user_.dynamic_interest[d] + cfg_.drift_rate * item.features[d];
        }
        normalize(user_.dynamic_interest);
    }
    next.interest_obs = observe_interest();

    steps_ += 1;
    StepOutcome out;
    out.next_state = std::move(next);
    out.reward = click ? 1.0 : 0.0;
    out.done = steps_ >= cfg_.episode_length;
    out.info = StepInfo{item.id, p};
    state_ = out.next_state;
    return out;
}

causal::AdjacencyMatrix RecEnv::ground_truth_mask(const FactoredState& s,
                                                  std::span<const double> action) const {
    (void)s; // the mask depends on the action's category only
    const int c = catalog_.items[nearest_item(action)].category;
    causal::AdjacencyMatrix m(cfg_.categories + 3);
    m.add_edge(action_node(), c);
    m.add_edge(action_node(), demographic_node());
    m.add_edge(action_node(), interest_node());
    return m;
}

bool RecEnv::counterfactual_check(const Transition& t) const {
    if (static_cast<int>(t.s.slots.size()) != cfg_.categories ||
        static_cast<int>(t.next.slots.size()) != cfg_.categories ||
        t.a.size() != static_cast<std::size_t>(cfg_.item_dim)) {
        throw InvalidInput("counterfactual_check: transition schema mismatch");
    }
    const Item& item = catalog_.items[nearest_item(t.a)];
    const int c = item.category;
    for (int j = 0; j < cfg_.categories; ++j) {
        if (j == c) continue;
        const auto& before = t.s.slots[j];
        const auto& after = t.next.slots[j];
        if (after.features != before.features || after.feedback != before.feedback ||
            after.recency != before.recency + 1) {
            return false;
        }
    }
    const auto& hit = t.next.slots[c];
    if (hit.features != item.features || hit.recency != 0) return false;
    if (hit.feedback != 0 && hit.feedback != 1) return false;
    if (t.r != static_cast<double>(hit.feedback)) return false;
    if (t.next.demographic != t.s.demographic) return false;
    return true;
}

void RecEnv::set_dynamic_interest(std::span<const double> v) {
    if (v.size() != user_.dynamic_interest.size()) {
        throw InvalidInput("set_dynamic_interest: dimension mismatch");
    }
    user_.dynamic_interest.assign(v.begin(), v.end());
}

// ---------------------------------------------------------------------------

void DiscreteMDP::validate() const {
    if (n_states < 1 || n_states > 32 || n_actions < 1 || n_actions > 8) {
        throw InvalidInput("DiscreteMDP: size out of supported range");
    }
    for (int s = 0; s < n_states; ++s) {
        for (int a = 0; a < n_actions; ++a) {
            double sum = 0.0;
            for (int s2 = 0; s2 < n_states; ++s2) {
                const double q = prob(s, a, s2);
                if (q < 0.0) throw InvalidInput("DiscreteMDP: negative transition probability");
                sum += q;
            }
            if (std::abs(sum - 1.0) > 1e-12) {
                throw InvalidInput("DiscreteMDP: row (" + std::to_string(s) + "," + std::to_string(a) +
                                   ") does not sum to 1");
            }
        }
    }
}

DiscreteMDP make_toy_mdp(const ToyMdpConfig& cfg) {
    DiscreteMDP mdp;
    if (cfg.kind == ToyMdpKind::Hub) {
        mdp.n_states = 4;
        mdp.n_actions = 3;
        mdp.p.assign(4 * 3 * 4, 0.0);
        auto set = [&](int s, int a, int s2, double q) {
            mdp.p[(static_cast<std::size_t>(s) * 3 + a) * 4 + s2] = q;
        };
        // Hub: each action reaches a distinct successor.
        set(0, 0, 1, 1.0);
        set(0, 1, 2, 1.0);
        set(0, 2, 3, 1.0);
        // Two effective choices.
        set(1, 0, 0, 1.0);
        set(1, 1, 1, 1.0);
        set(1, 2, 1, 1.0);
        // Noisy two-way channel, 0.1 crossover.
        set(2, 0, 0, 0.9);
        set(2, 0, 2, 0.1);
        set(2, 1, 2, 0.9);
        set(2, 1, 0, 0.1);
        set(2, 2, 2, 0.9);
        set(2, 2, 0, 0.1);
        // No control at all.
        set(3, 0, 3, 1.0);
        set(3, 1, 3, 1.0);
        set(3, 2, 3, 1.0);
        mdp.validate();
        return mdp;
    }

    mdp.n_states = cfg.n_states;
    mdp.n_actions = cfg.n_actions;
    mdp.p.assign(static_cast<std::size_t>(cfg.n_states) * cfg.n_actions * cfg.n_states, 0.0);
    if (cfg.kind == ToyMdpKind::Branch) {
        for (int s = 0; s < cfg.n_states; ++s) {
            for (int a = 0; a < cfg.n_actions; ++a) {
                const int s2 = (s + a + 1) % cfg.n_states;
                mdp.p[(static_cast<std::size_t>(s) * cfg.n_actions + a) * cfg.n_states + s2] = 1.0;
            }
        }
    } else {
        RngStream rng(cfg.seed, "toy-mdp");
        for (int s = 0; s < cfg.n_states; ++s) {
            for (int a = 0; a < cfg.n_actions; ++a) {
                double sum = 0.0;
                std::vector<double> row(cfg.n_states);
                for (int s2 = 0; s2 < cfg.n_states; ++s2) {
                    row[s2] = -std::log(rng.uniform_pos()); // Exp(1) draws, Dirichlet(1) row
                    sum += row[s2];
                }
                for (int s2 = 0; s2 < cfg.n_states; ++s2) {
                    mdp.p[(static_cast<std::size_t>(s) * cfg.n_actions + a) * cfg.n_states + s2] =
                        row[s2] / sum;
                }
            }
        }
    }
    mdp.validate();
    return mdp;
}

} // namespace imrl::env
