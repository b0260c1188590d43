#pragma once

// Sequence models: the pluggable stand-in for a large captioning model.
//
// A model is prompted with one region at a time and answers with a policy
// over next tokens plus a coarse scalar value of the current state. Expanding
// a node prompts up to branching_k uncovered regions and merges the answers;
// the per-region calls are independent, so implementations must be pure and
// safe to invoke concurrently (a batching contract, even though the shipped
// models are cheap closed-form tables).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "seqplan/core.hpp"
#include "seqplan/reward.hpp"

namespace seqplan {

/// Probability distribution over the next token; sums to 1 within 1e-9.
using PolicyVector = std::vector<double>;

struct ModelOutput {
    PolicyVector policy;
    double coarse_value = 0.0;
};

struct SequenceModel {
    virtual ~SequenceModel() = default;
    virtual ModelOutput evaluate(std::int32_t region_id, const SequenceState& state,
                                 const WorldInstance& world) const = 0;
};

/// One region's answer, tagged with the weight used when merging.
struct ExpansionEntry {
    std::int32_t region_id = 0;
    double saliency_weight = 0.0;
    PolicyVector policy;
    double coarse_value = 0.0;
};

struct ExpansionResult {
    std::vector<ExpansionEntry> entries;
};

// ---------------------------------------------------------------------------
// region selection
// ---------------------------------------------------------------------------

/// Up to k regions whose attribute tokens are not yet all present, ordered by
/// descending saliency weight, ties by ascending region_id.
inline std::vector<std::int32_t> identify_salient_regions(const SequenceState& state,
                                                          const WorldInstance& world,
                                                          std::int32_t k) {
    if (k < 1) {
        throw ValidationError("identify_salient_regions: k must be >= 1");
    }
    std::vector<const RegionSpec*> uncovered;
    for (const RegionSpec& region : world.regions) {
        bool all = true;
        for (TokenId t : region.attribute_tokens) {
            if (std::find(state.tokens.begin(), state.tokens.end(), t) ==
                state.tokens.end()) {
                all = false;
                break;
            }
        }
        if (!all) uncovered.push_back(&region);
    }
    std::sort(uncovered.begin(), uncovered.end(),
              [](const RegionSpec* a, const RegionSpec* b) {
                  if (a->saliency_weight != b->saliency_weight) {
                      return a->saliency_weight > b->saliency_weight;
                  }
                  return a->region_id < b->region_id;
              });
    if (static_cast<std::int32_t>(uncovered.size()) > k) uncovered.resize(k);
    std::vector<std::int32_t> ids;
    ids.reserve(uncovered.size());
    for (const RegionSpec* region : uncovered) ids.push_back(region->region_id);
    return ids;
}

inline const RegionSpec& find_region(const WorldInstance& world, std::int32_t region_id) {
    for (const RegionSpec& region : world.regions) {
        if (region.region_id == region_id) return region;
    }
    throw ValidationError("unknown region id " + std::to_string(region_id) +
                          " in world '" + world.world_id + "'");
}

// ---------------------------------------------------------------------------
// shipped models
// ---------------------------------------------------------------------------

namespace detail {

inline PolicyVector softmax(const std::vector<double>& logits) {
    double max_logit = *std::max_element(logits.begin(), logits.end());
    PolicyVector policy(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        policy[i] = std::exp(logits[i] - max_logit);
        sum += policy[i];
    }
    for (double& p : policy) p /= sum;
    return policy;
}

}  // namespace detail

/// Closed-form model: the prompted region's attribute tokens get a fixed
/// logit boost, and the EOS logit grows linearly with current coverage, so a
/// fully covered state makes EOS the most likely continuation. The slope
/// stays barely above the affinity boost: EOS must win only once coverage is
/// essentially complete, or it starves the search of content candidates.
struct TabularModel : SequenceModel {
    double affinity_logit = 2.0;
    double eos_slope = 2.2;

    TabularModel() = default;
    TabularModel(double affinity, double slope)
        : affinity_logit(affinity), eos_slope(slope) {}

    ModelOutput evaluate(std::int32_t region_id, const SequenceState& state,
                         const WorldInstance& world) const override {
        const RegionSpec& region = find_region(world, region_id);
        const double coverage = coverage_quality(state, world);
        std::vector<double> logits(world.vocab_size, 0.0);
        for (TokenId t : region.attribute_tokens) logits[t] += affinity_logit;
        logits[world.eos_token] += eos_slope * coverage;
        return {detail::softmax(logits), coverage};
    }
};

/// Degenerate model for single-step worlds where every token is a bandit arm:
/// uniform policy, zero coarse value, region prompt ignored.
struct BanditModel : SequenceModel {
    ModelOutput evaluate(std::int32_t /*region_id*/, const SequenceState& /*state*/,
                         const WorldInstance& world) const override {
        if (world.max_length != 1) {
            throw ContractViolation("BanditModel: world is not single-step (max_length != 1)");
        }
        PolicyVector policy(world.vocab_size,
                            1.0 / static_cast<double>(world.vocab_size));
        return {std::move(policy), 0.0};
    }
};

}  // namespace seqplan
