#pragma once

// Core domain types: token sequences, worlds, planner configuration.
//
// A world is a synthetic captioning target: a vocabulary, an EOS token, a
// length cap, and a set of weighted regions whose attribute tokens a caption
// is supposed to mention. Sequence states are immutable snapshots; appending
// returns a fresh state and flips the terminal flag when EOS or the length
// cap is reached.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace seqplan {

using TokenId = std::int32_t;

/// Thrown when a caller breaks an API precondition (programming error).
struct ContractViolation : std::logic_error {
    using std::logic_error::logic_error;
};

/// Thrown when input data is malformed (bad file, bad value, bad id).
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RegionSpec {
    std::int32_t region_id = 0;
    std::vector<TokenId> attribute_tokens;
    double saliency_weight = 0.0;
};

struct WorldInstance {
    std::string world_id;
    std::int32_t vocab_size = 0;
    TokenId eos_token = 0;
    std::int32_t max_length = 0;
    double reward_noise_sigma = 0.0;
    std::vector<RegionSpec> regions;
};

struct SequenceState {
    std::vector<TokenId> tokens;
    bool terminal = false;

    std::int32_t length() const { return static_cast<std::int32_t>(tokens.size()); }
};

struct PlannerConfig {
    double c_puct = 1.5;
    double alpha = 0.1;
    double lambda_v = 0.5;
    std::int32_t branching_k = 4;
    std::int32_t top_m_actions = 8;
    std::int32_t n_max_iterations = 200;
    double eps_stop = 1e-4;  // <= 0 disables the convergence check
    std::int32_t stop_window = 5;
    double gamma = 0.99;
    std::int32_t max_ngram_order = 3;
    std::uint64_t seed = 0;
    std::vector<TokenId> initial_tokens;
};

struct RewardBreakdown {
    double quality = 0.0;
    double depth = 0.0;
    double redundancy = 0.0;
    double total = 0.0;           // quality + depth - redundancy, noiseless
    double observed_total = 0.0;  // total plus clipped Gaussian noise
};

// ---------------------------------------------------------------------------
// state transitions
// ---------------------------------------------------------------------------

inline SequenceState append_token(const SequenceState& state, TokenId token,
                                  const WorldInstance& world) {
    if (state.terminal) {
        throw ContractViolation("append_token: state is already terminal");
    }
    if (token < 0 || token >= world.vocab_size) {
        throw ValidationError("append_token: token " + std::to_string(token) +
                              " out of range for vocab_size " +
                              std::to_string(world.vocab_size));
    }
    SequenceState next;
    next.tokens = state.tokens;
    next.tokens.push_back(token);
    next.terminal = (token == world.eos_token) ||
                    (next.length() == world.max_length);
    return next;
}

inline SequenceState make_state(std::vector<TokenId> tokens, const WorldInstance& world) {
    SequenceState state;
    for (TokenId t : tokens) state = append_token(state, t, world);
    return state;
}

// ---------------------------------------------------------------------------
// validation
// ---------------------------------------------------------------------------

/// Returns a human-readable list of invariant violations; empty means valid.
inline std::vector<std::string> validate_world(const WorldInstance& world) {
    std::vector<std::string> violations;
    if (world.vocab_size < 2) {
        violations.push_back("vocab_size must be >= 2, got " +
                             std::to_string(world.vocab_size));
    }
    if (world.max_length < 1) {
        violations.push_back("max_length must be >= 1, got " +
                             std::to_string(world.max_length));
    }
    if (world.eos_token < 0 || world.eos_token >= world.vocab_size) {
        violations.push_back("eos_token " + std::to_string(world.eos_token) +
                             " out of range for vocab_size " +
                             std::to_string(world.vocab_size));
    }
    if (world.reward_noise_sigma < 0.0) {
        violations.push_back("reward_noise_sigma must be >= 0, got " +
                             std::to_string(world.reward_noise_sigma));
    }
    std::set<std::int32_t> seen_ids;
    double weight_sum = 0.0;
    for (const RegionSpec& region : world.regions) {
        const std::string tag = "region " + std::to_string(region.region_id);
        if (!seen_ids.insert(region.region_id).second) {
            violations.push_back(tag + ": duplicate region_id");
        }
        if (region.attribute_tokens.empty()) {
            violations.push_back(tag + ": attribute_tokens must be non-empty");
        }
        for (TokenId t : region.attribute_tokens) {
            if (t < 0 || t >= world.vocab_size) {
                violations.push_back(tag + ": attribute token " + std::to_string(t) +
                                     " out of range for vocab_size " +
                                     std::to_string(world.vocab_size));
            }
        }
        if (!(region.saliency_weight > 0.0 && region.saliency_weight <= 1.0)) {
            violations.push_back(tag + ": saliency_weight must be in (0, 1], got " +
                                 std::to_string(region.saliency_weight));
        }
        weight_sum += region.saliency_weight;
    }
    if (std::abs(weight_sum - 1.0) > 1e-9) {
        violations.push_back("saliency weights sum to " + std::to_string(weight_sum) +
                             ", expected 1 within 1e-9");
    }
    return violations;
}

inline std::vector<std::string> validate_config(const PlannerConfig& config) {
    std::vector<std::string> violations;
    if (!(config.c_puct > 0.0)) violations.push_back("c_puct must be > 0");
    if (config.alpha < 0.0) violations.push_back("alpha must be >= 0");
    if (config.lambda_v < 0.0 || config.lambda_v > 1.0) {
        violations.push_back("lambda_v must be in [0, 1]");
    }
    if (config.branching_k < 1) violations.push_back("branching_k must be >= 1");
    if (config.top_m_actions < 1) violations.push_back("top_m_actions must be >= 1");
    if (config.n_max_iterations < 1) violations.push_back("n_max_iterations must be >= 1");
    if (config.stop_window < 1) violations.push_back("stop_window must be >= 1");
    if (!(config.gamma > 0.0 && config.gamma <= 1.0)) {
        violations.push_back("gamma must be in (0, 1]");
    }
    if (config.max_ngram_order < 1) violations.push_back("max_ngram_order must be >= 1");
    return violations;
}

// ---------------------------------------------------------------------------
// JSON serialization
// ---------------------------------------------------------------------------

namespace detail {

inline void require_keys(const nlohmann::json& j,
                         const std::vector<std::string>& required,
                         const std::vector<std::string>& optional,
                         const std::string& what) {
    for (const std::string& key : required) {
        if (!j.contains(key)) {
            throw ValidationError(what + ": missing key '" + key + "'");
        }
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& key = it.key();
        bool known = std::find(required.begin(), required.end(), key) != required.end() ||
                     std::find(optional.begin(), optional.end(), key) != optional.end();
        if (!known) {
            throw ValidationError(what + ": unknown key '" + key + "'");
        }
    }
}

}  // namespace detail

inline nlohmann::json world_to_json(const WorldInstance& world) {
    nlohmann::json regions = nlohmann::json::array();
    for (const RegionSpec& region : world.regions) {
        regions.push_back({{"region_id", region.region_id},
                           {"attribute_tokens", region.attribute_tokens},
                           {"saliency_weight", region.saliency_weight}});
    }
    return {{"world_id", world.world_id},
            {"vocab_size", world.vocab_size},
            {"eos_token", world.eos_token},
            {"max_length", world.max_length},
            {"reward_noise_sigma", world.reward_noise_sigma},
            {"regions", regions}};
}

inline WorldInstance world_from_json(const nlohmann::json& j) {
    detail::require_keys(j,
                         {"world_id", "vocab_size", "eos_token", "max_length",
                          "reward_noise_sigma", "regions"},
                         {}, "world");
    WorldInstance world;
    world.world_id = j.at("world_id").get<std::string>();
    world.vocab_size = j.at("vocab_size").get<std::int32_t>();
    world.eos_token = j.at("eos_token").get<TokenId>();
    world.max_length = j.at("max_length").get<std::int32_t>();
    world.reward_noise_sigma = j.at("reward_noise_sigma").get<double>();
    for (const nlohmann::json& rj : j.at("regions")) {
        detail::require_keys(rj, {"region_id", "attribute_tokens", "saliency_weight"},
                             {}, "region");
        RegionSpec region;
        region.region_id = rj.at("region_id").get<std::int32_t>();
        region.attribute_tokens = rj.at("attribute_tokens").get<std::vector<TokenId>>();
        region.saliency_weight = rj.at("saliency_weight").get<double>();
        world.regions.push_back(std::move(region));
    }
    return world;
}

inline nlohmann::json config_to_json(const PlannerConfig& config) {
    return {{"c_puct", config.c_puct},
            {"alpha", config.alpha},
            {"lambda_v", config.lambda_v},
            {"branching_k", config.branching_k},
            {"top_m_actions", config.top_m_actions},
            {"n_max_iterations", config.n_max_iterations},
            {"eps_stop", config.eps_stop},
            {"stop_window", config.stop_window},
            {"gamma", config.gamma},
            {"max_ngram_order", config.max_ngram_order},
            {"seed", config.seed},
            {"initial_tokens", config.initial_tokens}};
}

/// Absent fields keep their defaults; unknown fields are rejected.
inline PlannerConfig config_from_json(const nlohmann::json& j) {
    detail::require_keys(j, {},
                         {"c_puct", "alpha", "lambda_v", "branching_k",
                          "top_m_actions", "n_max_iterations", "eps_stop",
                          "stop_window", "gamma", "max_ngram_order", "seed",
                          "initial_tokens"},
                         "config");
    PlannerConfig config;
    if (j.contains("c_puct")) config.c_puct = j.at("c_puct").get<double>();
    if (j.contains("alpha")) config.alpha = j.at("alpha").get<double>();
    if (j.contains("lambda_v")) config.lambda_v = j.at("lambda_v").get<double>();
    if (j.contains("branching_k")) config.branching_k = j.at("branching_k").get<std::int32_t>();
    if (j.contains("top_m_actions")) config.top_m_actions = j.at("top_m_actions").get<std::int32_t>();
    if (j.contains("n_max_iterations")) config.n_max_iterations = j.at("n_max_iterations").get<std::int32_t>();
    if (j.contains("eps_stop")) config.eps_stop = j.at("eps_stop").get<double>();
    if (j.contains("stop_window")) config.stop_window = j.at("stop_window").get<std::int32_t>();
    if (j.contains("gamma")) config.gamma = j.at("gamma").get<double>();
    if (j.contains("max_ngram_order")) config.max_ngram_order = j.at("max_ngram_order").get<std::int32_t>();
    if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("initial_tokens")) config.initial_tokens = j.at("initial_tokens").get<std::vector<TokenId>>();
    return config;
}

inline nlohmann::json reward_to_json(const RewardBreakdown& reward) {
    return {{"quality", reward.quality},
            {"depth", reward.depth},
            {"redundancy", reward.redundancy},
            {"total", reward.total},
            {"observed_total", reward.observed_total}};
}

inline RewardBreakdown reward_from_json(const nlohmann::json& j) {
    detail::require_keys(j, {"quality", "depth", "redundancy", "total", "observed_total"},
                         {}, "reward");
    RewardBreakdown reward;
    reward.quality = j.at("quality").get<double>();
    reward.depth = j.at("depth").get<double>();
    reward.redundancy = j.at("redundancy").get<double>();
    reward.total = j.at("total").get<double>();
    reward.observed_total = j.at("observed_total").get<double>();
    return reward;
}

}  // namespace seqplan
