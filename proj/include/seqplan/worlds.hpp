#pragma once

// Canonical synthetic worlds used by the experiment commands and tests.
//
// Bandit worlds are single-step: every token is an arm, EOS is the last arm,
// and each arm's mean reward is the saliency weight of its singleton region.
// When the means do not sum to 1, a filler region with two attribute tokens
// absorbs the remainder; it can never be covered in one step, so it adds no
// arm.

#include <cstdint>
#include <string>
#include <vector>

#include "seqplan/core.hpp"
#include "seqplan/rng.hpp"

namespace seqplan {

/// Single region, short captions, no noise; trivially plannable.
inline WorldInstance make_easy_world() {
    WorldInstance world;
    world.world_id = "easy-1";
    world.vocab_size = 6;
    world.eos_token = 5;
    world.max_length = 4;
    world.reward_noise_sigma = 0.0;
    world.regions = {{0, {1, 2}, 1.0}};
    return world;
}

/// Four single-token regions of steeply descending weight over a ten-token
/// vocabulary. One region carries almost all of the saliency mass.
inline WorldInstance make_saliency_world() {
    WorldInstance world;
    world.world_id = "saliency-1";
    world.vocab_size = 10;
    world.eos_token = 9;
    world.max_length = 8;
    world.reward_noise_sigma = 0.0;
    world.regions = {{0, {1}, 0.9}, {1, {3}, 0.04}, {2, {5}, 0.035}, {3, {7}, 0.025}};
    return world;
}

/// K-armed single-step world; arm_means[i] is the mean reward of token i.
inline WorldInstance make_bandit_world(const std::vector<double>& arm_means,
                                       double sigma, const std::string& world_id) {
    const std::int32_t k = static_cast<std::int32_t>(arm_means.size());
    if (k < 2) {
        throw ValidationError("make_bandit_world: need at least 2 arms");
    }
    double sum = 0.0;
    for (double mean : arm_means) {
        if (!(mean > 0.0 && mean < 1.0)) {
            throw ValidationError("make_bandit_world: arm means must lie in (0, 1)");
        }
        sum += mean;
    }
    if (sum > 1.0 + 1e-12) {
        throw ValidationError("make_bandit_world: arm means must sum to at most 1");
    }
    WorldInstance world;
    world.world_id = world_id;
    world.vocab_size = k;
    world.eos_token = k - 1;
    world.max_length = 1;
    world.reward_noise_sigma = sigma;
    for (std::int32_t i = 0; i < k; ++i) {
        world.regions.push_back({i, {i}, arm_means[i]});
    }
    if (sum < 1.0 - 1e-12) {
        world.regions.push_back({k, {0, 1}, 1.0 - sum});
    }
    return world;
}

/// The regret experiment's default: four arms with gaps {0, 0.1, 0.2, 0.3}.
inline WorldInstance make_regret_bandit(double sigma) {
    return make_bandit_world({0.4, 0.3, 0.2, 0.1}, sigma, "bandit4-regret");
}

/// Arm index whose mean sits delta_h below the best in the world below.
inline constexpr std::int32_t kHallucinationArm = 2;

/// Four-arm bandit where arm kHallucinationArm is exactly delta_h below the
/// best arm; the other two arms fill the weight budget.
inline WorldInstance make_hallucination_bandit(double delta_h, double sigma) {
    if (!(delta_h > 0.0 && delta_h < 0.6)) {
        throw ValidationError("make_hallucination_bandit: delta_h must be in (0, 0.6)");
    }
    const double best = 0.4 + delta_h / 4.0;
    const double remainder = 0.2 + delta_h / 2.0;
    const std::vector<double> means = {best, remainder * 2.0 / 3.0, best - delta_h,
                                       remainder / 3.0};
    return make_bandit_world(means, sigma, "bandit4-hallucination");
}

inline constexpr std::int32_t kBranchingVocab = 64;
inline constexpr TokenId kBranchingOptimum = 10;

/// Per-token mean rewards paired with make_branching_world: four strong arms
/// inside the salient regions, a pseudo-random mediocre spread elsewhere.
inline std::vector<double> branching_token_values() {
    std::vector<double> values(kBranchingVocab, 0.0);
    Rng rng(20240817);
    for (std::int32_t t = 0; t < kBranchingVocab; ++t) {
        values[t] = 0.05 + 0.5 * rng.uniform01();
    }
    values[10] = 0.9;
    values[25] = 0.8;
    values[40] = 0.75;
    values[55] = 0.7;
    values[63] = 0.02;  // EOS arm
    return values;
}

/// 64 tokens, single step, four salient singleton regions that contain the
/// four strongest arms (token 10 is the unique optimum).
inline WorldInstance make_branching_world(double sigma) {
    WorldInstance world;
    world.world_id = "branch64";
    world.vocab_size = kBranchingVocab;
    world.eos_token = 63;
    world.max_length = 1;
    world.reward_noise_sigma = sigma;
    world.regions = {{0, {10}, 0.4}, {1, {25}, 0.3}, {2, {40}, 0.2}, {3, {55}, 0.1}};
    return world;
}

}  // namespace seqplan
