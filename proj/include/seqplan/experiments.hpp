#pragma once

// Experiment commands shared by the CLI and the acceptance checks.
//
// Each run_* function loads its inputs, runs the experiment, writes its
// output files under the resolved output directory, and returns the results
// in memory. All files are written in one pass from a fully built string so
// reruns with the same inputs produce byte-identical bytes.
//
// Overrides arrive as key=value pairs. Keys matching PlannerConfig fields
// adjust the config; the remaining keys are command parameters; anything left
// unconsumed is an error, as is the same key given twice.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "seqplan/core.hpp"
#include "seqplan/model.hpp"
#include "seqplan/oracle.hpp"
#include "seqplan/planner.hpp"
#include "seqplan/reward.hpp"
#include "seqplan/textio.hpp"
#include "seqplan/trace.hpp"
#include "seqplan/value_net.hpp"
#include "seqplan/worlds.hpp"

namespace seqplan {

struct ExperimentSpec {
    std::string world_path;
    std::string config_path;
    std::vector<std::uint64_t> seeds;
    std::string out_dir;
    std::vector<std::pair<std::string, std::string>> overrides;
    std::vector<std::string> trace_paths;
};

// ---------------------------------------------------------------------------
// input loading
// ---------------------------------------------------------------------------

namespace detail {

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open file '" + path + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

inline void write_text_file(const std::filesystem::path& path,
                            const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ValidationError("cannot write file '" + path.string() + "'");
    }
    out << content;
    if (!out) {
        throw ValidationError("failed while writing '" + path.string() + "'");
    }
}

inline nlohmann::json parse_json_file(const std::string& path) {
    const std::string text = read_text_file(path);
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("failed to parse '" + path + "': " + e.what());
    }
}

inline std::int64_t parse_integer(const std::string& key, const std::string& text) {
    try {
        std::size_t used = 0;
        const std::int64_t value = std::stoll(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return value;
    } catch (const std::exception&) {
        throw ValidationError("override '" + key + "': expected an integer, got '" +
                              text + "'");
    }
}

inline double parse_number(const std::string& key, const std::string& text) {
    try {
        return parse_double(text);
    } catch (const std::exception&) {
        throw ValidationError("override '" + key + "': expected a number, got '" +
                              text + "'");
    }
}

inline std::vector<double> parse_number_list(const std::string& key,
                                             const std::string& text) {
    std::vector<double> values;
    for (const std::string& part : split(text, ',')) {
        if (part.empty()) continue;
        values.push_back(parse_number(key, part));
    }
    if (values.empty()) {
        throw ValidationError("override '" + key + "': empty list");
    }
    return values;
}

inline std::vector<std::int32_t> parse_integer_list(const std::string& key,
                                                    const std::string& text) {
    std::vector<std::int32_t> values;
    for (const std::string& part : split(text, ',')) {
        if (part.empty()) continue;
        values.push_back(static_cast<std::int32_t>(parse_integer(key, part)));
    }
    return values;
}

}  // namespace detail

inline WorldInstance load_world_file(const std::string& path) {
    WorldInstance world;
    try {
        world = world_from_json(detail::parse_json_file(path));
    } catch (const ValidationError& e) {
        throw ValidationError("world file '" + path + "': " + e.what());
    }
    const std::vector<std::string> violations = validate_world(world);
    if (!violations.empty()) {
        std::ostringstream message;
        message << "world file '" << path << "' is invalid:";
        for (const std::string& violation : violations) message << "\n  " << violation;
        throw ValidationError(message.str());
    }
    return world;
}

inline PlannerConfig load_config_file(const std::string& path) {
    try {
        return config_from_json(detail::parse_json_file(path));
    } catch (const ValidationError& e) {
        throw ValidationError("config file '" + path + "': " + e.what());
    }
}

/// "100" means seeds 0..99; "3,7,11" is an explicit list (trailing commas ok).
inline std::vector<std::uint64_t> parse_seed_spec(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    if (text.find(',') == std::string::npos) {
        const std::int64_t count = detail::parse_integer("seeds", text);
        if (count < 1) {
            throw ValidationError("seed count must be >= 1, got " + text);
        }
        for (std::int64_t s = 0; s < count; ++s) {
            seeds.push_back(static_cast<std::uint64_t>(s));
        }
        return seeds;
    }
    for (const std::string& part : split(text, ',')) {
        if (part.empty()) continue;
        seeds.push_back(
            static_cast<std::uint64_t>(detail::parse_integer("seeds", part)));
    }
    if (seeds.empty()) {
        throw ValidationError("seed list is empty: '" + text + "'");
    }
    return seeds;
}

inline std::filesystem::path resolve_out_dir(const ExperimentSpec& spec) {
    std::string dir = spec.out_dir;
    if (dir.empty()) {
        const char* env = std::getenv("SEQPLAN_OUT_DIR");
        if (env != nullptr && *env != '\0') dir = env;
    }
    if (dir.empty()) dir = "out";
    const std::filesystem::path path(dir);
    std::filesystem::create_directories(path);
    return path;
}

// ---------------------------------------------------------------------------
// overrides
// ---------------------------------------------------------------------------

class Overrides {
public:
    explicit Overrides(const std::vector<std::pair<std::string, std::string>>& items)
        : items_(items), used_(items.size(), false) {
        for (std::size_t i = 0; i < items_.size(); ++i) {
            for (std::size_t j = i + 1; j < items_.size(); ++j) {
                if (items_[i].first == items_[j].first) {
                    throw ValidationError("override '" + items_[i].first +
                                          "' given more than once");
                }
            }
        }
    }

    std::optional<std::string> take(const std::string& key) {
        for (std::size_t i = 0; i < items_.size(); ++i) {
            if (items_[i].first == key) {
                used_[i] = true;
                return items_[i].second;
            }
        }
        return std::nullopt;
    }

    /// Consumes every key that names a PlannerConfig field.
    void apply_config(PlannerConfig& config) {
        if (auto v = take("c_puct")) config.c_puct = detail::parse_number("c_puct", *v);
        if (auto v = take("alpha")) config.alpha = detail::parse_number("alpha", *v);
        if (auto v = take("lambda_v")) {
            config.lambda_v = detail::parse_number("lambda_v", *v);
        }
        if (auto v = take("branching_k")) {
            config.branching_k =
                static_cast<std::int32_t>(detail::parse_integer("branching_k", *v));
        }
        if (auto v = take("top_m_actions")) {
            config.top_m_actions =
                static_cast<std::int32_t>(detail::parse_integer("top_m_actions", *v));
        }
        if (auto v = take("n_max_iterations")) {
            config.n_max_iterations = static_cast<std::int32_t>(
                detail::parse_integer("n_max_iterations", *v));
        }
        if (auto v = take("eps_stop")) {
            config.eps_stop = detail::parse_number("eps_stop", *v);
        }
        if (auto v = take("stop_window")) {
            config.stop_window =
                static_cast<std::int32_t>(detail::parse_integer("stop_window", *v));
        }
        if (auto v = take("gamma")) config.gamma = detail::parse_number("gamma", *v);
        if (auto v = take("max_ngram_order")) {
            config.max_ngram_order = static_cast<std::int32_t>(
                detail::parse_integer("max_ngram_order", *v));
        }
        if (auto v = take("seed")) {
            config.seed =
                static_cast<std::uint64_t>(detail::parse_integer("seed", *v));
        }
        if (auto v = take("initial_tokens")) {
            config.initial_tokens = detail::parse_integer_list("initial_tokens", *v);
        }
    }

    void finish() const {
        for (std::size_t i = 0; i < items_.size(); ++i) {
            if (!used_[i]) {
                throw ValidationError("unknown override '" + items_[i].first + "'");
            }
        }
    }

private:
    std::vector<std::pair<std::string, std::string>> items_;
    std::vector<bool> used_;
};

// ---------------------------------------------------------------------------
// shared pieces
// ---------------------------------------------------------------------------

inline std::unique_ptr<SequenceModel> make_model(const std::string& name,
                                                 const WorldInstance& world) {
    if (name == "tabular") return std::make_unique<TabularModel>();
    if (name == "bandit") return std::make_unique<BanditModel>();
    if (name.empty()) {
        if (world.max_length == 1) return std::make_unique<BanditModel>();
        return std::make_unique<TabularModel>();
    }
    throw ValidationError("unknown model '" + name + "' (expected tabular or bandit)");
}

inline double median(std::vector<double> values) {
    if (values.empty()) {
        throw ValidationError("median of an empty set");
    }
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace detail {

inline std::vector<std::uint64_t> sorted_seeds(std::vector<std::uint64_t> seeds,
                                               std::uint64_t default_count) {
    if (seeds.empty()) {
        for (std::uint64_t s = 0; s < default_count; ++s) seeds.push_back(s);
        return seeds;
    }
    std::sort(seeds.begin(), seeds.end());
    seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
    return seeds;
}

inline std::vector<std::int32_t> budget_grid(Overrides& overrides) {
    std::vector<std::int32_t> budgets = {16, 64, 256, 1024, 4096};
    if (auto v = overrides.take("t_grid")) {
        budgets = parse_integer_list("t_grid", *v);
    }
    if (budgets.empty()) {
        throw ValidationError("override 't_grid': empty list");
    }
    std::sort(budgets.begin(), budgets.end());
    budgets.erase(std::unique(budgets.begin(), budgets.end()), budgets.end());
    for (std::int32_t t : budgets) {
        if (t < 1) throw ValidationError("override 't_grid': budgets must be >= 1");
    }
    return budgets;
}

inline std::string trace_string(const RunTrace& trace) {
    std::ostringstream out;
    write_trace_jsonl(trace, out);
    return out.str();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// plan
// ---------------------------------------------------------------------------

struct PlanOutcome {
    std::vector<RunTrace> traces;
    std::vector<std::filesystem::path> trace_files;
};

/// One planning run per seed. Writes trace_<seed>.jsonl and
/// summary_<seed>.json for each.
inline PlanOutcome run_plan(const ExperimentSpec& spec) {
    if (spec.world_path.empty()) {
        throw ValidationError("plan: --world is required");
    }
    const WorldInstance world = load_world_file(spec.world_path);
    PlannerConfig base = spec.config_path.empty() ? PlannerConfig{}
                                                  : load_config_file(spec.config_path);
    Overrides overrides(spec.overrides);
    overrides.apply_config(base);
    const std::string model_name = overrides.take("model").value_or("");
    const std::string params_path = overrides.take("value_params").value_or("");
    overrides.finish();

    const std::unique_ptr<SequenceModel> model = make_model(model_name, world);
    ValueNetParams params;
    if (!params_path.empty()) {
        params = value_net_from_json(detail::parse_json_file(params_path));
        const std::int32_t expected = world.vocab_size + 3;
        if (params.input_dim != expected) {
            throw ValidationError("value params '" + params_path + "' expect " +
                                  std::to_string(params.input_dim) +
                                  " features but this world produces " +
                                  std::to_string(expected));
        }
    }
    const CoverageScorer scorer;
    const std::filesystem::path out_dir = resolve_out_dir(spec);

    std::vector<std::uint64_t> seeds = spec.seeds;
    if (seeds.empty()) seeds.push_back(base.seed);

    PlanOutcome outcome;
    for (std::uint64_t seed : seeds) {
        PlannerConfig config = base;
        config.seed = seed;
        const PlannerEnv env{world, *model, scorer, params, config};
        RunTrace trace = plan_sequence(env);

        const std::filesystem::path trace_path =
            out_dir / ("trace_" + std::to_string(seed) + ".jsonl");
        detail::write_text_file(trace_path, detail::trace_string(trace));
        detail::write_text_file(out_dir / ("summary_" + std::to_string(seed) + ".json"),
                                summary_to_json(trace).dump(2) + "\n");
        outcome.trace_files.push_back(trace_path);
        outcome.traces.push_back(std::move(trace));
    }
    return outcome;
}

// ---------------------------------------------------------------------------
// oracle
// ---------------------------------------------------------------------------

struct OracleOutcome {
    OracleResult result;
};

/// Exhaustive optimum for a world. Writes oracle_summary.json and, with
/// dump_table=1, value_table.csv listing every terminal sequence.
inline OracleOutcome run_oracle(const ExperimentSpec& spec) {
    if (spec.world_path.empty()) {
        throw ValidationError("oracle: --world is required");
    }
    const WorldInstance world = load_world_file(spec.world_path);
    PlannerConfig config = spec.config_path.empty() ? PlannerConfig{}
                                                    : load_config_file(spec.config_path);
    Overrides overrides(spec.overrides);
    overrides.apply_config(config);
    const bool dump_table = overrides.take("dump_table").value_or("0") == "1";
    overrides.finish();

    const CoverageScorer scorer;
    OracleOutcome outcome{enumerate_optimal(world, config, scorer, dump_table)};

    const std::filesystem::path out_dir = resolve_out_dir(spec);
    const nlohmann::json summary = {{"world_id", world.world_id},
                                    {"best_tokens", outcome.result.best_tokens},
                                    {"best_total", outcome.result.best_total},
                                    {"terminal_count", outcome.result.terminal_count}};
    detail::write_text_file(out_dir / "oracle_summary.json", summary.dump(2) + "\n");
    if (dump_table) {
        std::ostringstream table;
        write_value_table_csv(outcome.result, table);
        detail::write_text_file(out_dir / "value_table.csv", table.str());
    }
    return outcome;
}

// ---------------------------------------------------------------------------
// regret
// ---------------------------------------------------------------------------

struct RegretRecord {
    std::int32_t budget = 0;
    std::uint64_t seed = 0;
    double regret = 0.0;
};

struct RegretOutcome {
    std::vector<RegretRecord> records;
    std::vector<std::pair<std::int32_t, double>> medians;  // budget ascending
};

/// Simple regret against the exhaustive optimum across iteration budgets.
/// Defaults: the four-arm bandit, budgets {16,64,256,1024,4096}, seeds 0..99.
/// Early stopping is disabled so each budget is spent exactly.
inline RegretOutcome run_regret(const ExperimentSpec& spec) {
    Overrides overrides(spec.overrides);
    const double sigma =
        detail::parse_number("sigma", overrides.take("sigma").value_or("0.5"));
    const WorldInstance world = spec.world_path.empty()
                                    ? make_regret_bandit(sigma)
                                    : load_world_file(spec.world_path);
    PlannerConfig base = spec.config_path.empty() ? PlannerConfig{}
                                                  : load_config_file(spec.config_path);
    base.eps_stop = 0.0;
    overrides.apply_config(base);
    const std::string model_name = overrides.take("model").value_or("");
    const std::vector<std::int32_t> budgets = detail::budget_grid(overrides);
    overrides.finish();

    const std::vector<std::uint64_t> seeds = detail::sorted_seeds(spec.seeds, 100);
    const std::unique_ptr<SequenceModel> model = make_model(model_name, world);
    const CoverageScorer scorer;
    const ValueNetParams no_net;
    const OracleResult oracle = enumerate_optimal(world, base, scorer);

    RegretOutcome outcome;
    std::string rows = "budget,seed,regret\n";
    for (std::int32_t budget : budgets) {
        std::vector<double> regrets;
        for (std::uint64_t seed : seeds) {
            PlannerConfig config = base;
            config.n_max_iterations = budget;
            config.seed = seed;
            const PlannerEnv env{world, *model, scorer, no_net, config};
            const RunTrace trace = plan_sequence(env);
            const double regret =
                simple_regret(oracle, trace.final_tokens, world, config, scorer);
            outcome.records.push_back({budget, seed, regret});
            regrets.push_back(regret);
            rows += std::to_string(budget) + "," + std::to_string(seed) + "," +
                    format_double(regret) + "\n";
        }
        outcome.medians.emplace_back(budget, median(regrets));
    }

    std::string summary = "budget,median_regret\n";
    for (const auto& [budget, value] : outcome.medians) {
        summary += std::to_string(budget) + "," + format_double(value) + "\n";
    }
    const std::filesystem::path out_dir = resolve_out_dir(spec);
    detail::write_text_file(out_dir / "regret.csv", rows);
    detail::write_text_file(out_dir / "regret_summary.csv", summary);
    return outcome;
}

// ---------------------------------------------------------------------------
// hallucination
// ---------------------------------------------------------------------------

struct HallucinationSummaryRow {
    std::int32_t budget = 0;
    std::int64_t runs = 0;
    std::int64_t hallucinations = 0;
    double fraction = 0.0;
};

struct HallucinationOutcome {
    TokenId hallucination_token = 0;
    std::vector<HallucinationSummaryRow> summary;  // budget ascending
};

/// Fraction of runs that commit to the known-bad arm, per budget. Defaults:
/// the built-in hallucination bandit (delta_h=0.2, sigma=0.5), seeds 0..199.
inline HallucinationOutcome run_hallucination(const ExperimentSpec& spec) {
    Overrides overrides(spec.overrides);
    const double sigma =
        detail::parse_number("sigma", overrides.take("sigma").value_or("0.5"));
    const double delta_h =
        detail::parse_number("delta_h", overrides.take("delta_h").value_or("0.2"));

    WorldInstance world;
    TokenId bad_token = kHallucinationArm;
    if (spec.world_path.empty()) {
        world = make_hallucination_bandit(delta_h, sigma);
    } else {
        world = load_world_file(spec.world_path);
        const auto token = overrides.take("halluc_token");
        if (!token) {
            throw ValidationError(
                "hallucination: override halluc_token=<id> is required with --world");
        }
        bad_token = static_cast<TokenId>(detail::parse_integer("halluc_token", *token));
    }
    if (world.max_length != 1) {
        throw ValidationError("hallucination: world must have max_length == 1");
    }

    PlannerConfig base = spec.config_path.empty() ? PlannerConfig{}
                                                  : load_config_file(spec.config_path);
    base.eps_stop = 0.0;
    overrides.apply_config(base);
    const std::string model_name = overrides.take("model").value_or("");
    const std::vector<std::int32_t> budgets = detail::budget_grid(overrides);
    overrides.finish();

    const std::vector<std::uint64_t> seeds = detail::sorted_seeds(spec.seeds, 200);
    const std::unique_ptr<SequenceModel> model = make_model(model_name, world);
    const CoverageScorer scorer;
    const ValueNetParams no_net;

    HallucinationOutcome outcome;
    outcome.hallucination_token = bad_token;
    std::string rows = "budget,seed,chosen_token\n";
    for (std::int32_t budget : budgets) {
        HallucinationSummaryRow row;
        row.budget = budget;
        for (std::uint64_t seed : seeds) {
            PlannerConfig config = base;
            config.n_max_iterations = budget;
            config.seed = seed;
            const PlannerEnv env{world, *model, scorer, no_net, config};
            const RunTrace trace = plan_sequence(env);
            const TokenId chosen = trace.final_tokens.front();
            row.runs += 1;
            if (chosen == bad_token) row.hallucinations += 1;
            rows += std::to_string(budget) + "," + std::to_string(seed) + "," +
                    std::to_string(chosen) + "\n";
        }
        row.fraction = static_cast<double>(row.hallucinations) /
                       static_cast<double>(row.runs);
        outcome.summary.push_back(row);
    }

    std::string summary = "budget,runs,hallucinations,fraction\n";
    for (const HallucinationSummaryRow& row : outcome.summary) {
        summary += std::to_string(row.budget) + "," + std::to_string(row.runs) + "," +
                   std::to_string(row.hallucinations) + "," +
                   format_double(row.fraction) + "\n";
    }
    const std::filesystem::path out_dir = resolve_out_dir(spec);
    detail::write_text_file(out_dir / "hallucination.csv", rows);
    detail::write_text_file(out_dir / "hallucination_summary.csv", summary);
    return outcome;
}

// ---------------------------------------------------------------------------
// branching
// ---------------------------------------------------------------------------

struct BranchingRecord {
    std::string mode;
    std::uint64_t seed = 0;
    std::int32_t iterations = 0;  // budget + 1 when the threshold was never hit
};

struct BranchingOutcome {
    std::vector<BranchingRecord> records;
    double median_restricted = 0.0;
    double median_full = 0.0;
    double threshold = 0.0;
};

/// Iterations until the committed arm is worth at least 95% of the optimum,
/// with saliency-restricted expansion (tabular model, top_m=8) against
/// unrestricted expansion (uniform model, top_m=vocab). Defaults: budget
/// 4096, seeds 0..49.
inline BranchingOutcome run_branching(const ExperimentSpec& spec) {
    if (!spec.world_path.empty()) {
        throw ValidationError(
            "branching: uses its built-in world; --world is not supported");
    }
    Overrides overrides(spec.overrides);
    const double sigma =
        detail::parse_number("sigma", overrides.take("sigma").value_or("0.5"));
    const std::int32_t budget = static_cast<std::int32_t>(
        detail::parse_integer("budget", overrides.take("budget").value_or("4096")));
    if (budget < 1) {
        throw ValidationError("override 'budget': must be >= 1");
    }
    PlannerConfig base = spec.config_path.empty() ? PlannerConfig{}
                                                  : load_config_file(spec.config_path);
    overrides.apply_config(base);
    overrides.finish();

    const WorldInstance world = make_branching_world(sigma);
    const TokenTableScorer scorer(branching_token_values());
    const ValueNetParams no_net;
    const std::vector<std::uint64_t> seeds = detail::sorted_seeds(spec.seeds, 50);

    const OracleResult oracle = enumerate_optimal(world, base, scorer);
    const double threshold = 0.95 * oracle.best_total;
    std::vector<double> arm_total(world.vocab_size, 0.0);
    for (TokenId t = 0; t < world.vocab_size; ++t) {
        const SequenceState state = make_state({t}, world);
        arm_total[t] = terminal_reward_noiseless(state, world, base, scorer).total;
    }

    const TabularModel tabular;
    const BanditModel uniform;
    struct Mode {
        std::string name;
        const SequenceModel* model;
        std::int32_t top_m;
    };
    const std::vector<Mode> modes = {{"full", &uniform, world.vocab_size},
                                     {"restricted", &tabular, base.top_m_actions}};

    BranchingOutcome outcome;
    outcome.threshold = threshold;
    std::string rows = "mode,seed,iterations_to_95\n";
    std::vector<double> per_mode[2];
    for (std::size_t m = 0; m < modes.size(); ++m) {
        const Mode& mode = modes[m];
        PlannerConfig config = base;
        config.top_m_actions = mode.top_m;
        for (std::uint64_t seed : seeds) {
            config.seed = seed;
            const PlannerEnv env{world, *mode.model, scorer, no_net, config};
            Rng rng(seed);
            SearchTree tree;
            const std::int32_t root_id = tree.make_root(SequenceState{});
            std::int32_t hit = budget + 1;
            for (std::int32_t i = 1; i <= budget; ++i) {
                mcts_iteration(tree, root_id, env, rng, i);
                if (tree.node(root_id).expanded &&
                    !tree.node(root_id).children.empty() &&
                    arm_total[best_action_by_visits(tree, root_id)] >= threshold) {
                    hit = i;
                    break;
                }
            }
            outcome.records.push_back({mode.name, seed, hit});
            per_mode[m].push_back(static_cast<double>(hit));
            rows += mode.name + "," + std::to_string(seed) + "," +
                    std::to_string(hit) + "\n";
        }
    }
    outcome.median_full = median(per_mode[0]);
    outcome.median_restricted = median(per_mode[1]);

    std::string summary = "mode,median_iterations\n";
    summary += "full," + format_double(outcome.median_full) + "\n";
    summary += "restricted," + format_double(outcome.median_restricted) + "\n";
    const std::filesystem::path out_dir = resolve_out_dir(spec);
    detail::write_text_file(out_dir / "branching.csv", rows);
    detail::write_text_file(out_dir / "branching_summary.csv", summary);
    return outcome;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepRecord {
    std::string param;
    double value = 0.0;
    std::uint64_t seed = 0;
    double total_reward = 0.0;
    std::int32_t caption_length = 0;
    std::int64_t iterations_total = 0;
    std::int64_t model_calls = 0;
};

struct SweepOutcome {
    std::vector<SweepRecord> records;
};

/// Grid sweep over c_puct, alpha, and lambda_v (or one of them via
/// param=<name>, optionally with grid=<comma list>). Defaults: the saliency
/// world, seeds 0..9. total_reward is the noiseless final total.
inline SweepOutcome run_sweep(const ExperimentSpec& spec) {
    const WorldInstance world = spec.world_path.empty()
                                    ? make_saliency_world()
                                    : load_world_file(spec.world_path);
    PlannerConfig base = spec.config_path.empty() ? PlannerConfig{}
                                                  : load_config_file(spec.config_path);
    Overrides overrides(spec.overrides);
    overrides.apply_config(base);
    const std::string model_name = overrides.take("model").value_or("");
    const std::optional<std::string> param = overrides.take("param");
    const std::optional<std::string> grid_text = overrides.take("grid");
    overrides.finish();

    std::map<std::string, std::vector<double>> grids = {
        {"alpha", {0.0, 0.05, 0.1, 0.2, 0.3}},
        {"c_puct", {0.5, 1.0, 1.5, 2.0, 2.5}},
        {"lambda_v", {0.0, 0.25, 0.5, 0.75, 1.0}}};
    std::vector<std::string> params;
    if (param) {
        if (grids.find(*param) == grids.end()) {
            throw ValidationError("override 'param': unknown parameter '" + *param +
                                  "' (expected alpha, c_puct, or lambda_v)");
        }
        params.push_back(*param);
        if (grid_text) {
            grids[*param] = detail::parse_number_list("grid", *grid_text);
        }
    } else {
        if (grid_text) {
            throw ValidationError("override 'grid' requires override 'param'");
        }
        params = {"alpha", "c_puct", "lambda_v"};
    }

    const std::vector<std::uint64_t> seeds = detail::sorted_seeds(spec.seeds, 10);
    const std::unique_ptr<SequenceModel> model = make_model(model_name, world);
    const CoverageScorer scorer;
    const ValueNetParams no_net;

    SweepOutcome outcome;
    std::string rows =
        "param,value,seed,total_reward,caption_length,iterations_total,model_calls\n";
    for (const std::string& name : params) {
        for (double value : grids[name]) {
            for (std::uint64_t seed : seeds) {
                PlannerConfig config = base;
                if (name == "alpha") config.alpha = value;
                if (name == "c_puct") config.c_puct = value;
                if (name == "lambda_v") config.lambda_v = value;
                config.seed = seed;
                const PlannerEnv env{world, *model, scorer, no_net, config};
                const RunTrace trace = plan_sequence(env);
                SweepRecord record;
                record.param = name;
                record.value = value;
                record.seed = seed;
                record.total_reward = trace.final_reward.total;
                record.caption_length =
                    static_cast<std::int32_t>(trace.final_tokens.size());
                for (const StepRecord& step : trace.steps) {
                    record.iterations_total += step.iterations_used;
                }
                record.model_calls = trace.model_calls;
                outcome.records.push_back(record);
                rows += name + "," + format_double(value) + "," +
                        std::to_string(seed) + "," +
                        format_double(record.total_reward) + "," +
                        std::to_string(record.caption_length) + "," +
                        std::to_string(record.iterations_total) + "," +
                        std::to_string(record.model_calls) + "\n";
            }
        }
    }
    const std::filesystem::path out_dir = resolve_out_dir(spec);
    detail::write_text_file(out_dir / "sweep.csv", rows);
    return outcome;
}

// ---------------------------------------------------------------------------
// train-value
// ---------------------------------------------------------------------------

struct TrainValueOutcome {
    TrainResult result;
    std::size_t pairs = 0;
    std::int32_t skipped_traces = 0;
};

/// Fits the value net on states collected from trace files. Writes
/// dataset.csv, value_params.json, loss_curve.csv, and training_summary.json.
inline TrainValueOutcome run_train_value(const ExperimentSpec& spec) {
    if (spec.world_path.empty()) {
        throw ValidationError("train-value: --world is required");
    }
    if (spec.trace_paths.empty()) {
        throw ValidationError("train-value: at least one --traces file is required");
    }
    const WorldInstance world = load_world_file(spec.world_path);

    Overrides overrides(spec.overrides);
    TrainingHyper hyper;
    if (auto v = overrides.take("lr")) {
        hyper.learning_rate = detail::parse_number("lr", *v);
    }
    if (auto v = overrides.take("weight_decay")) {
        hyper.weight_decay = detail::parse_number("weight_decay", *v);
    }
    if (auto v = overrides.take("batch_size")) {
        hyper.batch_size =
            static_cast<std::int32_t>(detail::parse_integer("batch_size", *v));
    }
    if (auto v = overrides.take("epochs")) {
        hyper.epochs = static_cast<std::int32_t>(detail::parse_integer("epochs", *v));
    }
    if (auto v = overrides.take("hidden_dim")) {
        hyper.hidden_dim =
            static_cast<std::int32_t>(detail::parse_integer("hidden_dim", *v));
    }
    if (auto v = overrides.take("train_seed")) {
        hyper.train_seed =
            static_cast<std::uint64_t>(detail::parse_integer("train_seed", *v));
    }
    overrides.finish();

    std::vector<RunTrace> traces;
    for (const std::string& path : spec.trace_paths) {
        std::istringstream in(detail::read_text_file(path));
        try {
            traces.push_back(read_trace_jsonl(in));
        } catch (const std::exception& e) {
            throw ValidationError("trace file '" + path + "': " + e.what());
        }
    }
    const CollectResult collected = collect_training_data(traces, world);
    if (collected.pairs.empty()) {
        throw ValidationError("train-value: no usable training pairs in the traces");
    }

    TrainValueOutcome outcome;
    outcome.pairs = collected.pairs.size();
    outcome.skipped_traces = collected.skipped_traces;
    outcome.result = train(collected.pairs, hyper);

    const std::filesystem::path out_dir = resolve_out_dir(spec);
    std::ostringstream dataset;
    write_dataset_csv(collected.pairs, dataset);
    detail::write_text_file(out_dir / "dataset.csv", dataset.str());
    detail::write_text_file(out_dir / "value_params.json",
                            value_net_to_json(outcome.result.params).dump(2) + "\n");

    std::string curve = "epoch,mean_mse\n";
    for (std::size_t i = 0; i < outcome.result.loss_curve.size(); ++i) {
        curve += std::to_string(i + 1) + "," +
                 format_double(outcome.result.loss_curve[i]) + "\n";
    }
    detail::write_text_file(out_dir / "loss_curve.csv", curve);

    const nlohmann::json summary = {
        {"world_id", world.world_id},
        {"pairs", outcome.pairs},
        {"skipped_traces", outcome.skipped_traces},
        {"epochs", hyper.epochs},
        {"final_loss", outcome.result.loss_curve.empty()
                           ? 0.0
                           : outcome.result.loss_curve.back()}};
    detail::write_text_file(out_dir / "training_summary.json", summary.dump(2) + "\n");
    return outcome;
}

}  // namespace seqplan
