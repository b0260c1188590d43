#pragma once

// Brute-force enumeration of every terminal sequence in a world.
//
// Only feasible for desk-sized worlds, so enumeration refuses to start when
// vocab_size^max_length exceeds 2^20 states. Values are always noiseless;
// ties go to the lexicographically smallest token sequence.

#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "seqplan/core.hpp"
#include "seqplan/reward.hpp"
#include "seqplan/textio.hpp"

namespace seqplan {

struct OracleResult {
    std::vector<TokenId> best_tokens;
    double best_total = 0.0;
    std::int64_t terminal_count = 0;
    std::vector<std::pair<std::vector<TokenId>, double>> value_table;
};

namespace detail {

/// vocab^max_length, saturating at 2^62.
inline std::int64_t state_space_bound(std::int32_t vocab_size, std::int32_t max_length) {
    const std::int64_t cap = std::int64_t{1} << 62;
    std::int64_t size = 1;
    for (std::int32_t i = 0; i < max_length; ++i) {
        if (size > cap / vocab_size) return cap;
        size *= vocab_size;
    }
    return size;
}

inline void enumerate_from(const SequenceState& state, const WorldInstance& world,
                           const PlannerConfig& config, const QualityScorer& scorer,
                           bool keep_table, OracleResult& result) {
    if (state.terminal) {
        const RewardBreakdown reward =
            terminal_reward_noiseless(state, world, config, scorer);
        result.terminal_count += 1;
        if (keep_table) result.value_table.push_back({state.tokens, reward.total});
        const bool better =
            result.terminal_count == 1 || reward.total > result.best_total ||
            (reward.total == result.best_total && state.tokens < result.best_tokens);
        if (better) {
            result.best_total = reward.total;
            result.best_tokens = state.tokens;
        }
        return;
    }
    for (TokenId t = 0; t < world.vocab_size; ++t) {
        enumerate_from(append_token(state, t, world), world, config, scorer,
                       keep_table, result);
    }
}

}  // namespace detail

/// Exhaustive optimum over terminal sequences. The value table lists every
/// terminal sequence in lexicographic order when keep_table is set.
inline OracleResult enumerate_optimal(const WorldInstance& world,
                                      const PlannerConfig& config,
                                      const QualityScorer& scorer,
                                      bool keep_table = false) {
    const std::int64_t bound =
        detail::state_space_bound(world.vocab_size, world.max_length);
    const std::int64_t limit = std::int64_t{1} << 20;
    if (bound > limit) {
        throw ValidationError(
            "enumerate_optimal: state space " + std::to_string(world.vocab_size) + "^" +
            std::to_string(world.max_length) + " = " +
            (bound == (std::int64_t{1} << 62) ? std::string("more than 2^62")
                                              : std::to_string(bound)) +
            " exceeds the 2^20 guard");
    }
    OracleResult result;
    detail::enumerate_from(SequenceState{}, world, config, scorer, keep_table, result);
    return result;
}

/// Gap between the oracle optimum and a finished sequence, evaluated with the
/// same noiseless reward. Never negative for sequences from the same world.
inline double simple_regret(const OracleResult& oracle,
                            const std::vector<TokenId>& final_tokens,
                            const WorldInstance& world, const PlannerConfig& config,
                            const QualityScorer& scorer) {
    const SequenceState state = make_state(final_tokens, world);
    if (!state.terminal) {
        throw ValidationError("simple_regret: sequence is not terminal");
    }
    const RewardBreakdown reward = terminal_reward_noiseless(state, world, config, scorer);
    return oracle.best_total - reward.total;
}

inline void write_value_table_csv(const OracleResult& oracle, std::ostream& out) {
    out << "sequence,total\n";
    for (const auto& [tokens, total] : oracle.value_table) {
        std::string joined;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (i > 0) joined.push_back(' ');
            joined += std::to_string(tokens[i]);
        }
        out << joined << "," << format_double(total) << "\n";
    }
}

}  // namespace seqplan
