#include "imrl/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "imrl/errors.hpp"

namespace imrl::harness {

using nlohmann::json;

namespace {

json env_to_json(const env::EnvConfig& e) {
    return json{{"categories", e.categories},
                {"item_dim", e.item_dim},
                {"demo_dim", e.demo_dim},
                {"num_items", e.num_items},
                {"episode_length", e.episode_length},
                {"sharpness", e.sharpness},
                {"base_offset", e.base_offset},
                {"drift_rate", e.drift_rate},
                {"obs_noise_std", e.obs_noise_std},
                {"mode", e.mode == env::InterestMode::InterestEvolution ? "interest-evolution"
                                                                        : "static-pref"},
                {"reward_max", e.reward_max},
                {"boredom_scale", e.boredom_scale},
                {"boredom_decay", e.boredom_decay},
                {"demo_weight", e.demo_weight},
                {"seed", e.seed}};
}

env::EnvConfig env_from_json(const json& j) {
    env::EnvConfig e;
    e.categories = j.value("categories", e.categories);
    e.item_dim = j.value("item_dim", e.item_dim);
    e.demo_dim = j.value("demo_dim", e.demo_dim);
    e.num_items = j.value("num_items", e.num_items);
    e.episode_length = j.value("episode_length", e.episode_length);
    e.sharpness = j.value("sharpness", e.sharpness);
    e.base_offset = j.value("base_offset", e.base_offset);
    e.drift_rate = j.value("drift_rate", e.drift_rate);
    e.obs_noise_std = j.value("obs_noise_std", e.obs_noise_std);
    const std::string mode = j.value("mode", "interest-evolution");
    if (mode == "interest-evolution") {
        e.mode = env::InterestMode::InterestEvolution;
    } else if (mode == "static-pref") {
        e.mode = env::InterestMode::StaticPref;
    } else {
        throw InvalidInput("config: unknown env mode '" + mode + "'");
    }
    e.reward_max = j.value("reward_max", e.reward_max);
    e.boredom_scale = j.value("boredom_scale", e.boredom_scale);
    e.boredom_decay = j.value("boredom_decay", e.boredom_decay);
    e.demo_weight = j.value("demo_weight", e.demo_weight);
    e.seed = j.value("seed", e.seed);
    return e;
}

json agent_to_json(const agent::HyperParams& h) {
    return json{{"gamma", h.gamma},
                {"lr", h.lr},
                {"buffer_capacity", h.buffer_capacity},
                {"hidden", h.hidden},
                {"activation", h.activation == nn::Activation::Relu ? "relu" : "softplus"},
                {"beta", h.beta},
                {"alpha_r", h.alpha_r},
                {"alpha_init", h.alpha_init},
                {"target_entropy", h.target_entropy},
                {"tune_temperature", h.tune_temperature},
                {"polyak", h.polyak},
                {"batch_size", h.batch_size},
                {"twin_q", h.twin_q},
                {"intrinsic",
                 h.intrinsic == agent::IntrinsicMode::Empowerment ? "empowerment" : "kl"}};
}

agent::HyperParams agent_from_json(const json& j) {
    agent::HyperParams h;
    h.gamma = j.value("gamma", h.gamma);
    h.lr = j.value("lr", h.lr);
    h.buffer_capacity = j.value("buffer_capacity", h.buffer_capacity);
    h.hidden = j.value("hidden", h.hidden);
    const std::string act = j.value("activation", "softplus");
    if (act == "relu") {
        h.activation = nn::Activation::Relu;
    } else if (act == "softplus") {
        h.activation = nn::Activation::Softplus;
    } else {
        throw InvalidInput("config: unknown activation '" + act + "'");
    }
    h.beta = j.value("beta", h.beta);
    h.alpha_r = j.value("alpha_r", h.alpha_r);
    h.alpha_init = j.value("alpha_init", h.alpha_init);
    h.target_entropy = j.value("target_entropy", h.target_entropy);
    h.tune_temperature = j.value("tune_temperature", h.tune_temperature);
    h.polyak = j.value("polyak", h.polyak);
    h.batch_size = j.value("batch_size", h.batch_size);
    h.twin_q = j.value("twin_q", h.twin_q);
    const std::string intr = j.value("intrinsic", "empowerment");
    if (intr == "empowerment") {
        h.intrinsic = agent::IntrinsicMode::Empowerment;
    } else if (intr == "kl") {
        h.intrinsic = agent::IntrinsicMode::KlClosedForm;
    } else {
        throw InvalidInput("config: unknown intrinsic '" + intr + "'");
    }
    return h;
}

json augmentation_to_json(const causal::AugmentationConfig& a) {
    return json{{"sigma", a.sigma},
                {"decay", a.decay},
                {"t_max", a.t_max},
                {"pairs_per_trigger", a.pairs_per_trigger}};
}

causal::AugmentationConfig augmentation_from_json(const json& j) {
    causal::AugmentationConfig a;
    a.sigma = j.value("sigma", a.sigma);
    a.decay = j.value("decay", a.decay);
    a.t_max = j.value("t_max", a.t_max);
    a.pairs_per_trigger = j.value("pairs_per_trigger", a.pairs_per_trigger);
    return a;
}

} // namespace

void ExperimentConfig::validate() const {
    environment.validate();
    agent.validate();
    augmentation.validate();
    if (seeds.empty()) throw InvalidInput("config: seeds must be non-empty");
    if (episodes < 0) throw InvalidInput("config: episodes must be >= 0");
    if (eval_every < 1) throw InvalidInput("config: eval_every must be >= 1");
    if (eval_episodes < 1) throw InvalidInput("config: eval_episodes must be >= 1");
    if (checkpoint_every < 1) throw InvalidInput("config: checkpoint_every must be >= 1");
    if (ablation.kl_intrinsic && ablation.no_empowerment) {
        throw InvalidInput("config: kl_intrinsic and no_empowerment are mutually exclusive");
    }
}

ExperimentConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("config: JSON parse error: ") + e.what());
    }
    ExperimentConfig cfg;
    if (j.contains("env")) cfg.environment = env_from_json(j.at("env"));
    if (j.contains("agent")) cfg.agent = agent_from_json(j.at("agent"));
    if (j.contains("augmentation")) cfg.augmentation = augmentation_from_json(j.at("augmentation"));
    const std::string det = j.value("detector", "heuristic");
    if (det == "heuristic") {
        cfg.detector = causal::DetectorKind::Heuristic;
    } else if (det == "oracle") {
        cfg.detector = causal::DetectorKind::Oracle;
    } else {
        throw InvalidInput("config: unknown detector '" + det + "'");
    }
    if (j.contains("ablation")) {
        const json& a = j.at("ablation");
        cfg.ablation.no_empowerment = a.value("no_empowerment", false);
        cfg.ablation.no_augmentation = a.value("no_augmentation", false);
        cfg.ablation.kl_intrinsic = a.value("kl_intrinsic", false);
    }
    cfg.seeds = j.value("seeds", cfg.seeds);
    cfg.episodes = j.value("episodes", cfg.episodes);
    cfg.eval_every = j.value("eval_every", cfg.eval_every);
    cfg.eval_episodes = j.value("eval_episodes", cfg.eval_episodes);
    cfg.checkpoint_every = j.value("checkpoint_every", cfg.checkpoint_every);
    cfg.audit = j.value("audit", cfg.audit);
    cfg.validate();
    return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
    json j{{"env", env_to_json(cfg.environment)},
           {"agent", agent_to_json(cfg.agent)},
           {"augmentation", augmentation_to_json(cfg.augmentation)},
           {"detector", cfg.detector == causal::DetectorKind::Oracle ? "oracle" : "heuristic"},
           {"ablation",
            json{{"no_empowerment", cfg.ablation.no_empowerment},
                 {"no_augmentation", cfg.ablation.no_augmentation},
                 {"kl_intrinsic", cfg.ablation.kl_intrinsic}}},
           {"seeds", cfg.seeds},
           {"episodes", cfg.episodes},
           {"eval_every", cfg.eval_every},
           {"eval_episodes", cfg.eval_episodes},
           {"checkpoint_every", cfg.checkpoint_every},
           {"audit", cfg.audit}};
    return j.dump(2) + "\n";
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw InvalidInput("cannot open config: " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return config_from_json(ss.str());
}

void save_config(const std::filesystem::path& path, const ExperimentConfig& cfg) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw InvalidInput("cannot write config: " + path.string());
    f << config_to_json(cfg);
}

std::uint64_t seed_offset_from_env() {
    const char* raw = std::getenv("IMRL_SEED_OFFSET");
    if (raw == nullptr || *raw == '\0') return 0;
    return std::strtoull(raw, nullptr, 10);
}

void apply_seed_offset(ExperimentConfig& cfg, std::uint64_t offset) {
    for (auto& s : cfg.seeds) s += offset;
}

Variant variant_from_flags(const AblationFlags& flags) {
    std::string name = "imrl";
    if (flags.no_empowerment) name += "-e";
    if (flags.kl_intrinsic) name += "-kl";
    if (flags.no_augmentation) name += "-a";
    return Variant{name, flags};
}

std::vector<Variant> ablation_variants() {
    return {variant_from_flags({}),
            variant_from_flags({.no_empowerment = true}),
            variant_from_flags({.no_augmentation = true}),
            variant_from_flags({.kl_intrinsic = true})};
}

agent::HyperParams effective_hyperparams(const ExperimentConfig& cfg, const AblationFlags& flags) {
    agent::HyperParams h = cfg.agent;
    if (flags.no_empowerment) h.beta = 0.0;
    if (flags.kl_intrinsic) h.intrinsic = agent::IntrinsicMode::KlClosedForm;
    return h;
}

bool augmentation_enabled(const ExperimentConfig& cfg, const AblationFlags& flags) {
    (void)cfg;
    return !flags.no_augmentation;
}

} // namespace imrl::harness
