#include "imrl/causal.hpp"

#include <cmath>
#include <numeric>

namespace imrl::causal {

// graph.hpp implementation ---------------------------------------------------

std::vector<std::vector<int>> connected_components(const AdjacencyMatrix& m) {
    const int n = m.size();
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto root = [&](int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (m.has_edge(i, j)) parent[root(i)] = root(j);
        }
    }
    std::vector<std::vector<int>> groups(n);
    for (int i = 0; i < n; ++i) groups[root(i)].push_back(i);
    std::vector<std::vector<int>> out;
    for (auto& g : groups) {
        if (!g.empty()) out.push_back(std::move(g)); // members already ascend
    }
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return out;
}

std::vector<int> component_of(const AdjacencyMatrix& m, int node) {
    for (auto& group : connected_components(m)) {
        if (std::find(group.begin(), group.end(), node) != group.end()) return group;
    }
    return {node};
}

// causal.hpp implementation --------------------------------------------------

std::vector<int> independent_components(const env::RecEnv& e, const env::FactoredState& s,
                                        std::span<const double> action, DetectorKind detector) {
    const int categories = e.config().categories;
    if (static_cast<int>(s.slots.size()) != categories) {
        throw InvalidInput("independent_components: state schema mismatch");
    }
    std::vector<int> out;
    if (detector == DetectorKind::Oracle) {
        const AdjacencyMatrix mask = e.ground_truth_mask(s, action);
        const std::vector<int> dependent = component_of(mask, e.action_node());
        for (int c = 0; c < mask.size() - 1; ++c) { // exclude the action node itself
            if (std::find(dependent.begin(), dependent.end(), c) == dependent.end()) {
                out.push_back(c);
            }
        }
    } else {
        const int hit = e.catalog().items[e.nearest_item(action)].category;
        for (int c = 0; c < categories; ++c) {
            if (c != hit) out.push_back(c);
        }
    }
    return out;
}

double adaptive_threshold(long episode, const AugmentationConfig& cfg) {
    cfg.validate();
    const double lambda_floor = cfg.sigma / cfg.t_max;
    const double lambda_d = std::max(std::pow(cfg.decay, static_cast<double>(episode)), lambda_floor);
    return std::min(cfg.sigma / lambda_d, cfg.t_max);
}

std::optional<Transition> counterfactual_swap(const Transition& t1, const Transition& t2,
                                              const env::RecEnv& e, DetectorKind detector,
                                              RngStream& rng, int* swapped_component) {
    if (t1.s.slots.size() != t2.s.slots.size() || t1.a.size() != t2.a.size()) {
        throw InvalidInput("counterfactual_swap: transition schema mismatch");
    }
    const std::vector<int> m1 = independent_components(e, t1.s, t1.a, detector);
    const std::vector<int> m2 = independent_components(e, t2.s, t2.a, detector);
    std::vector<int> shared;
    std::set_intersection(m1.begin(), m1.end(), m2.begin(), m2.end(), std::back_inserter(shared));
    if (shared.empty()) return std::nullopt;

    const int d = shared[rng.below(shared.size())];
    if (swapped_component != nullptr) *swapped_component = d;
    // Components past the slot range (demographic, interest observation) are
    // never independent here, so d always names a category slot.
    if (env::slot_is_empty(t1.s, d) || env::slot_is_empty(t2.s, d)) return std::nullopt;

    Transition generated = t1;
    generated.s.slots[d] = t2.s.slots[d];
    generated.next.slots[d] = t2.next.slots[d];
    return generated;
}

} // namespace imrl::causal
