#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "imrl/env.hpp"
#include "imrl/errors.hpp"
#include "imrl/graph.hpp"
#include "imrl/rng.hpp"

namespace imrl::causal {

using env::Transition;

enum class DetectorKind {
    Oracle,   // reads the environment's ground-truth mask
    Heuristic // nearest-item category; demographic and interest always dependent
};

/// Sorted state-component indices causally independent of the action's
/// connected component for this (state, action) pair.
std::vector<int> independent_components(const env::RecEnv& e, const env::FactoredState& s,
                                        std::span<const double> action, DetectorKind detector);

/// Governs when informative transitions trigger augmentation.
struct AugmentationConfig {
    double sigma = 1.0;          // threshold numerator, also its initial value
    double decay = 0.999;        // per-episode decay factor of lambda_d, in (0,1)
    double t_max = 1.0;          // environment reward ceiling
    int pairs_per_trigger = 4;   // partner draws per triggering transition

    void validate() const {
        if (sigma <= 0.0) throw InvalidInput("AugmentationConfig: sigma must be positive");
        if (decay <= 0.0 || decay >= 1.0) throw InvalidInput("AugmentationConfig: decay outside (0,1)");
        if (t_max <= 0.0) throw InvalidInput("AugmentationConfig: t_max must be positive");
        if (pairs_per_trigger < 1) throw InvalidInput("AugmentationConfig: pairs_per_trigger must be >= 1");
    }
};

/// Informativeness threshold at a given episode: T = sigma / lambda_d with
/// lambda_d decaying geometrically and floored so that T never exceeds t_max.
/// Monotone non-decreasing in the episode index.
double adaptive_threshold(long episode, const AugmentationConfig& cfg);

/// Swaps one shared independent component between two transitions. Returns
/// the counterfactual transition, or nothing when the independent sets do not
/// intersect or the drawn component is empty-initialized in either input.
/// The reward is carried from t1: the swapped component is reward-irrelevant.
/// Actions are monolithic, so only state components are exchanged.
std::optional<Transition> counterfactual_swap(const Transition& t1, const Transition& t2,
                                              const env::RecEnv& e, DetectorKind detector,
                                              RngStream& rng, int* swapped_component = nullptr);

struct AuditRow {
    long episode = 0;
    double trigger_r = 0.0;
    int component = -1;
    std::size_t partner_index = 0;
    bool oracle_valid = false;
};

/// Appends counterfactual variants of `fresh` (already pushed to the buffer)
/// built against uniformly drawn partners with r >= threshold. Returns the
/// number of appended transitions; at most cfg.pairs_per_trigger.
template <typename Buffer>
std::size_t augment_buffer(Buffer& buffer, const Transition& fresh, double threshold,
                           const env::RecEnv& e, DetectorKind detector,
                           const AugmentationConfig& cfg, RngStream& rng,
                           long episode = 0, std::vector<AuditRow>* audit = nullptr) {
    if (fresh.r < threshold || buffer.size() == 0) return 0;

    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < buffer.size(); ++i) {
        if (buffer[i].r >= threshold) eligible.push_back(i);
    }
    if (eligible.empty()) return 0;

    // Partners are drawn and copied before any push: appending may evict the
    // oldest entries and shift buffer indices.
    std::vector<std::size_t> picked(cfg.pairs_per_trigger);
    std::vector<Transition> partners;
    partners.reserve(cfg.pairs_per_trigger);
    for (int k = 0; k < cfg.pairs_per_trigger; ++k) {
        picked[k] = eligible[rng.below(eligible.size())];
        partners.push_back(buffer[picked[k]]);
    }

    std::size_t appended = 0;
    for (int k = 0; k < cfg.pairs_per_trigger; ++k) {
        int component = -1;
        auto generated = counterfactual_swap(fresh, partners[k], e, detector, rng, &component);
        if (!generated) continue;
        if (audit != nullptr) {
            audit->push_back(AuditRow{episode, fresh.r, component, picked[k],
                                      e.counterfactual_check(*generated)});
        }
        buffer.push(std::move(*generated));
        ++appended;
    }
    return appended;
}

} // namespace imrl::causal
