#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "imrl/agent.hpp"
#include "imrl/causal.hpp"
#include "imrl/env.hpp"

namespace imrl::harness {

struct AblationFlags {
    bool no_empowerment = false;
    bool no_augmentation = false;
    bool kl_intrinsic = false;
};

struct ExperimentConfig {
    env::EnvConfig environment;
    agent::HyperParams agent;
    causal::AugmentationConfig augmentation;
    causal::DetectorKind detector = causal::DetectorKind::Heuristic;
    AblationFlags ablation;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    long episodes = 2000;
    int eval_every = 10;
    int eval_episodes = 3;
    long checkpoint_every = 100;
    bool audit = false;

    void validate() const;
};

ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const ExperimentConfig& cfg);

/// IMRL_SEED_OFFSET shifts every seed; 0 when unset.
std::uint64_t seed_offset_from_env();
void apply_seed_offset(ExperimentConfig& cfg, std::uint64_t offset);

struct Variant {
    std::string name; // imrl, imrl-e, imrl-a, imrl-kl, or dash-joined combination
    AblationFlags flags;
};

Variant variant_from_flags(const AblationFlags& flags);
/// The four variants compared in the ablation study.
std::vector<Variant> ablation_variants();

/// Hyperparameters after resolving ablation flags (no_empowerment -> beta 0,
/// kl_intrinsic -> closed-form KL intrinsic).
agent::HyperParams effective_hyperparams(const ExperimentConfig& cfg, const AblationFlags& flags);
bool augmentation_enabled(const ExperimentConfig& cfg, const AblationFlags& flags);

} // namespace imrl::harness
