#pragma once

// Terminal reward for a finished caption.
//
// The reward decomposes into three pieces that are also reported separately:
//   quality     pluggable scorer in [0, 1], coverage of region attributes by
//               default
//   depth       alpha * ln(1 + length), rewards longer captions
//   redundancy  worst n-gram repetition ratio up to max_ngram_order, in [0, 1]
// total = quality + depth - redundancy. When the world carries reward noise,
// observed_total adds one Gaussian draw clipped to +-6 sigma; total itself is
// always noiseless.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "seqplan/core.hpp"
#include "seqplan/rng.hpp"

namespace seqplan {

// ---------------------------------------------------------------------------
// quality scorers
// ---------------------------------------------------------------------------

/// Pure function of (state, world) into [0, 1]. Implementations must be
/// deterministic and safe to call concurrently.
struct QualityScorer {
    virtual ~QualityScorer() = default;
    virtual double score(const SequenceState& state, const WorldInstance& world) const = 0;
};

/// Saliency-weighted fraction of regions whose attribute tokens all appear.
inline double coverage_quality(const SequenceState& state, const WorldInstance& world) {
    std::set<TokenId> present(state.tokens.begin(), state.tokens.end());
    double covered = 0.0;
    for (const RegionSpec& region : world.regions) {
        bool all = true;
        for (TokenId t : region.attribute_tokens) {
            if (!present.count(t)) {
                all = false;
                break;
            }
        }
        if (all) covered += region.saliency_weight;
    }
    return covered;
}

struct CoverageScorer : QualityScorer {
    double score(const SequenceState& state, const WorldInstance& world) const override {
        return coverage_quality(state, world);
    }
};

/// Looks up the first token in a fixed per-token value table. Meant for
/// single-step worlds where each token is one arm of a bandit.
struct TokenTableScorer : QualityScorer {
    std::vector<double> token_value;

    explicit TokenTableScorer(std::vector<double> values) : token_value(std::move(values)) {}

    double score(const SequenceState& state, const WorldInstance& world) const override {
        if (static_cast<std::int32_t>(token_value.size()) != world.vocab_size) {
            throw ValidationError("TokenTableScorer: table size does not match vocab_size");
        }
        if (state.tokens.empty()) return 0.0;
        return token_value[state.tokens.front()];
    }
};

// ---------------------------------------------------------------------------
// reward components
// ---------------------------------------------------------------------------

inline double depth_reward(const SequenceState& state, double alpha) {
    if (alpha < 0.0) {
        throw ValidationError("depth_reward: alpha must be >= 0");
    }
    return alpha * std::log1p(static_cast<double>(state.length()));
}

/// Worst repetition ratio 1 - distinct/total over n-gram orders 1..max_order.
/// Orders longer than the sequence contribute nothing; empty sequences score 0.
inline double redundancy_penalty(const SequenceState& state, std::int32_t max_order) {
    if (max_order < 1) {
        throw ValidationError("redundancy_penalty: max_order must be >= 1");
    }
    const std::int32_t len = state.length();
    double worst = 0.0;
    for (std::int32_t n = 1; n <= max_order; ++n) {
        const std::int32_t total = len - n + 1;
        if (total < 1) break;
        std::set<std::vector<TokenId>> distinct;
        for (std::int32_t i = 0; i < total; ++i) {
            distinct.insert(std::vector<TokenId>(state.tokens.begin() + i,
                                                 state.tokens.begin() + i + n));
        }
        const double ratio = 1.0 - static_cast<double>(distinct.size()) /
                                       static_cast<double>(total);
        worst = std::max(worst, ratio);
    }
    return worst;
}

// ---------------------------------------------------------------------------
// terminal reward
// ---------------------------------------------------------------------------

inline RewardBreakdown terminal_reward_noiseless(const SequenceState& state,
                                                 const WorldInstance& world,
                                                 const PlannerConfig& config,
                                                 const QualityScorer& scorer) {
    if (!state.terminal) {
        throw ContractViolation("terminal_reward: state is not terminal");
    }
    RewardBreakdown reward;
    reward.quality = scorer.score(state, world);
    reward.depth = depth_reward(state, config.alpha);
    reward.redundancy = redundancy_penalty(state, config.max_ngram_order);
    reward.total = reward.quality + reward.depth - reward.redundancy;
    reward.observed_total = reward.total;
    return reward;
}

/// Noisy observation of the terminal reward. The noise draw is clipped to
/// +-6 sigma so a single outlier cannot dominate a whole search.
inline RewardBreakdown terminal_reward(const SequenceState& state,
                                       const WorldInstance& world,
                                       const PlannerConfig& config,
                                       const QualityScorer& scorer, Rng& rng) {
    RewardBreakdown reward = terminal_reward_noiseless(state, world, config, scorer);
    const double sigma = world.reward_noise_sigma;
    if (sigma > 0.0) {
        double noise = sigma * rng.gaussian();
        noise = std::clamp(noise, -6.0 * sigma, 6.0 * sigma);
        reward.observed_total = reward.total + noise;
    }
    return reward;
}

}  // namespace seqplan
