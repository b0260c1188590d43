#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include <catch2/catch_amalgamated.hpp>

#include "seqplan/experiments.hpp"
#include "seqplan/worlds.hpp"

using Catch::Approx;
using Catch::Matchers::ContainsSubstring;
using namespace seqplan;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;

    explicit TempDir(const std::string& label) {
        path = fs::temp_directory_path() /
               ("seqplan_test_" + label + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::size_t count_lines(const std::string& text) {
    std::size_t lines = 0;
    for (char c : text) {
        if (c == '\n') lines += 1;
    }
    return lines;
}

fs::path write_world(const fs::path& dir, const WorldInstance& world) {
    const fs::path path = dir / (world.world_id + ".json");
    std::ofstream out(path);
    out << world_to_json(world).dump(2) << "\n";
    return path;
}

}  // namespace

TEST_CASE("seed specs accept a count or an explicit list") {
    const std::vector<std::uint64_t> counted = parse_seed_spec("100");
    REQUIRE(counted.size() == 100);
    REQUIRE(counted.front() == 0);
    REQUIRE(counted.back() == 99);

    REQUIRE(parse_seed_spec("3,7,11") == std::vector<std::uint64_t>{3, 7, 11});
    REQUIRE(parse_seed_spec("5,") == std::vector<std::uint64_t>{5});
    REQUIRE_THROWS_AS(parse_seed_spec("0"), ValidationError);
    REQUIRE_THROWS_AS(parse_seed_spec("many"), ValidationError);
    REQUIRE_THROWS_AS(parse_seed_spec(","), ValidationError);
}

TEST_CASE("output directory resolution prefers spec, then environment") {
    TempDir tmp("outdir");

    ExperimentSpec spec;
    spec.out_dir = (tmp.path / "explicit").string();
    REQUIRE(resolve_out_dir(spec) == fs::path(spec.out_dir));
    REQUIRE(fs::is_directory(tmp.path / "explicit"));

    spec.out_dir.clear();
    const std::string from_env = (tmp.path / "fromenv").string();
    ::setenv("SEQPLAN_OUT_DIR", from_env.c_str(), 1);
    REQUIRE(resolve_out_dir(spec) == fs::path(from_env));
    REQUIRE(fs::is_directory(from_env));

    ::unsetenv("SEQPLAN_OUT_DIR");
    const fs::path previous = fs::current_path();
    fs::current_path(tmp.path);
    REQUIRE(resolve_out_dir(spec) == fs::path("out"));
    REQUIRE(fs::is_directory(tmp.path / "out"));
    fs::current_path(previous);
}

TEST_CASE("overrides reject duplicates and unknown keys") {
    REQUIRE_THROWS_WITH(Overrides({{"alpha", "0.1"}, {"alpha", "0.2"}}),
                        ContainsSubstring("more than once"));

    Overrides unknown(std::vector<std::pair<std::string, std::string>>{
        {"bogus", "1"}});
    REQUIRE_THROWS_WITH(unknown.finish(),
                        ContainsSubstring("unknown override 'bogus'"));

    PlannerConfig config;
    Overrides known({{"alpha", "0.25"}, {"n_max_iterations", "17"}});
    known.apply_config(config);
    known.finish();
    REQUIRE(config.alpha == 0.25);
    REQUIRE(config.n_max_iterations == 17);
    REQUIRE_THROWS_AS(
        [] {
            PlannerConfig c;
            Overrides bad(std::vector<std::pair<std::string, std::string>>{
                {"alpha", "fast"}});
            bad.apply_config(c);
        }(),
        ValidationError);
}

TEST_CASE("model selection by name and by world shape") {
    const WorldInstance easy = make_easy_world();
    const WorldInstance bandit = make_regret_bandit(0.5);
    REQUIRE(dynamic_cast<TabularModel*>(make_model("", easy).get()) != nullptr);
    REQUIRE(dynamic_cast<BanditModel*>(make_model("", bandit).get()) != nullptr);
    REQUIRE(dynamic_cast<BanditModel*>(make_model("bandit", easy).get()) != nullptr);
    REQUIRE(dynamic_cast<TabularModel*>(make_model("tabular", bandit).get()) !=
            nullptr);
    REQUIRE_THROWS_WITH(make_model("oracle", easy),
                        ContainsSubstring("unknown model"));
}

TEST_CASE("median handles odd, even, and empty inputs") {
    REQUIRE(median({3.0, 1.0, 2.0}) == 2.0);
    REQUIRE(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
    REQUIRE(median({5.0}) == 5.0);
    REQUIRE_THROWS_AS(median({}), ValidationError);
}

TEST_CASE("plan writes traces that replay and reruns are byte-identical") {
    TempDir tmp("plan");
    const fs::path world_path = write_world(tmp.path, make_easy_world());

    ExperimentSpec spec;
    spec.world_path = world_path.string();
    spec.seeds = {0, 1};
    spec.out_dir = (tmp.path / "a").string();
    const PlanOutcome first = run_plan(spec);

    REQUIRE(first.traces.size() == 2);
    REQUIRE(first.trace_files.size() == 2);
    for (std::size_t i = 0; i < first.trace_files.size(); ++i) {
        std::istringstream in(slurp(first.trace_files[i]));
        const RunTrace replayed = read_trace_jsonl(in);
        REQUIRE(replayed.world_id == "easy-1");
        REQUIRE(replayed.final_tokens == first.traces[i].final_tokens);
        REQUIRE(replayed.steps.size() == first.traces[i].steps.size());
        REQUIRE(replayed.has_final_reward);
        REQUIRE(replayed.final_reward.total == first.traces[i].final_reward.total);
    }
    REQUIRE(fs::exists(tmp.path / "a" / "summary_0.json"));
    REQUIRE(fs::exists(tmp.path / "a" / "summary_1.json"));

    spec.out_dir = (tmp.path / "b").string();
    run_plan(spec);
    REQUIRE(slurp(tmp.path / "a" / "trace_0.jsonl") ==
            slurp(tmp.path / "b" / "trace_0.jsonl"));
    REQUIRE(slurp(tmp.path / "a" / "summary_0.json") ==
            slurp(tmp.path / "b" / "summary_0.json"));
    REQUIRE(slurp(tmp.path / "a" / "trace_1.jsonl") ==
            slurp(tmp.path / "b" / "trace_1.jsonl"));
}

TEST_CASE("plan surfaces missing files and mismatched value params") {
    TempDir tmp("plan_errors");

    ExperimentSpec spec;
    spec.out_dir = (tmp.path / "out").string();
    REQUIRE_THROWS_WITH(run_plan(spec), ContainsSubstring("--world"));

    const std::string missing = (tmp.path / "missing.json").string();
    spec.world_path = missing;
    REQUIRE_THROWS_WITH(run_plan(spec), ContainsSubstring(missing));

    spec.world_path = write_world(tmp.path, make_easy_world()).string();
    const ValueNetParams small = init_value_net(7, 4, 1);
    const fs::path params_path = tmp.path / "params.json";
    std::ofstream(params_path) << value_net_to_json(small).dump(2) << "\n";
    spec.overrides = {{"value_params", params_path.string()}};
    REQUIRE_THROWS_WITH(run_plan(spec), ContainsSubstring("features"));

    spec.overrides = {{"bogus", "1"}};
    REQUIRE_THROWS_WITH(run_plan(spec), ContainsSubstring("unknown override"));
}

TEST_CASE("oracle run dumps the summary and optional value table") {
    TempDir tmp("oracle");
    ExperimentSpec spec;
    spec.world_path = write_world(tmp.path, make_easy_world()).string();
    spec.out_dir = (tmp.path / "out").string();
    spec.overrides = {{"dump_table", "1"}};

    const OracleOutcome outcome = run_oracle(spec);
    REQUIRE(outcome.result.best_tokens == std::vector<TokenId>{0, 1, 2, 3});

    const nlohmann::json summary =
        nlohmann::json::parse(slurp(tmp.path / "out" / "oracle_summary.json"));
    REQUIRE(summary.at("world_id") == "easy-1");
    REQUIRE(summary.at("terminal_count") == 781);

    const std::string table = slurp(tmp.path / "out" / "value_table.csv");
    REQUIRE(count_lines(table) == 782);  // header + one row per sequence
}

TEST_CASE("regret run spends each budget and is noiseless-exact") {
    TempDir tmp("regret");
    ExperimentSpec spec;
    spec.out_dir = (tmp.path / "out").string();
    spec.seeds = {4, 0, 1, 2, 3, 3};
    spec.overrides = {{"sigma", "0"}, {"t_grid", "64,16,16"}};

    const RegretOutcome outcome = run_regret(spec);
    REQUIRE(outcome.records.size() == 10);
    REQUIRE(outcome.medians.size() == 2);
    REQUIRE(outcome.medians[0].first == 16);
    REQUIRE(outcome.medians[1].first == 64);

    for (std::size_t i = 0; i < outcome.records.size(); ++i) {
        const RegretRecord& record = outcome.records[i];
        REQUIRE(record.regret >= 0.0);
        REQUIRE(record.budget == (i < 5 ? 16 : 64));
        REQUIRE(record.seed == i % 5);
        if (record.budget >= 64) REQUIRE(record.regret == 0.0);
    }
    REQUIRE(outcome.medians[1].second == 0.0);

    REQUIRE(count_lines(slurp(tmp.path / "out" / "regret.csv")) == 11);
    REQUIRE(count_lines(slurp(tmp.path / "out" / "regret_summary.csv")) == 3);

    spec.out_dir = (tmp.path / "again").string();
    run_regret(spec);
    REQUIRE(slurp(tmp.path / "out" / "regret.csv") ==
            slurp(tmp.path / "again" / "regret.csv"));

    spec.overrides = {{"t_grid", "0"}};
    REQUIRE_THROWS_WITH(run_regret(spec), ContainsSubstring("t_grid"));
}

TEST_CASE("noiseless hallucination runs never pick the bad arm") {
    TempDir tmp("halluc");
    ExperimentSpec spec;
    spec.out_dir = (tmp.path / "out").string();
    spec.seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    spec.overrides = {{"sigma", "0"}, {"t_grid", "16,64"}};

    const HallucinationOutcome outcome = run_hallucination(spec);
    REQUIRE(outcome.hallucination_token == kHallucinationArm);
    REQUIRE(outcome.summary.size() == 2);
    for (const HallucinationSummaryRow& row : outcome.summary) {
        REQUIRE(row.runs == 10);
        REQUIRE(row.hallucinations == 0);
        REQUIRE(row.fraction == 0.0);
    }
    REQUIRE(count_lines(slurp(tmp.path / "out" / "hallucination.csv")) == 21);
    REQUIRE(count_lines(slurp(tmp.path / "out" / "hallucination_summary.csv")) == 3);
}

TEST_CASE("hallucination run validates custom worlds") {
    TempDir tmp("halluc_world");
    ExperimentSpec spec;
    spec.out_dir = (tmp.path / "out").string();

    spec.world_path = write_world(tmp.path, make_easy_world()).string();
    spec.overrides = {{"halluc_token", "2"}, {"t_grid", "4"}};
    REQUIRE_THROWS_WITH(run_hallucination(spec), ContainsSubstring("max_length"));

    spec.world_path = write_world(tmp.path, make_regret_bandit(0.5)).string();
    spec.overrides = {{"t_grid", "4"}};
    REQUIRE_THROWS_WITH(run_hallucination(spec), ContainsSubstring("halluc_token"));
}

TEST_CASE("branching run reports both modes against the 95% threshold") {
    TempDir tmp("branching");
    ExperimentSpec spec;
    spec.out_dir = (tmp.path / "out").string();
    spec.seeds = {0, 1, 2};
    spec.overrides = {{"budget", "64"}};

    const BranchingOutcome outcome = run_branching(spec);
    REQUIRE(outcome.threshold == Approx(0.9208489821531948).margin(1e-12));
    REQUIRE(outcome.records.size() == 6);
    for (const BranchingRecord& record : outcome.records) {
        REQUIRE((record.mode == "full" || record.mode == "restricted"));
        REQUIRE(record.iterations >= 1);
        REQUIRE(record.iterations <= 65);
    }
    REQUIRE(outcome.median_full > 0.0);
    REQUIRE(outcome.median_restricted > 0.0);
    REQUIRE(count_lines(slurp(tmp.path / "out" / "branching.csv")) == 7);
    REQUIRE(count_lines(slurp(tmp.path / "out" / "branching_summary.csv")) == 3);

    spec.world_path = write_world(tmp.path, make_branching_world(0.5)).string();
    REQUIRE_THROWS_WITH(run_branching(spec), ContainsSubstring("--world"));
}

TEST_CASE("sweep emits one row per grid point per seed") {
    TempDir tmp("sweep");
    ExperimentSpec spec;
    spec.out_dir = (tmp.path / "out").string();
    spec.overrides = {{"param", "alpha"}};

    const SweepOutcome outcome = run_sweep(spec);
    REQUIRE(outcome.records.size() == 50);  // 5 grid values x 10 default seeds
    std::vector<double> values;
    for (const SweepRecord& record : outcome.records) {
        REQUIRE(record.param == "alpha");
        values.push_back(record.value);
    }
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    REQUIRE(values == std::vector<double>{0.0, 0.05, 0.1, 0.2, 0.3});
    REQUIRE(count_lines(slurp(tmp.path / "out" / "sweep.csv")) == 51);

    spec.overrides = {{"grid", "0,1"}};
    REQUIRE_THROWS_WITH(run_sweep(spec),
                        ContainsSubstring("'grid' requires override 'param'"));
    spec.overrides = {{"param", "sigma"}};
    REQUIRE_THROWS_WITH(run_sweep(spec), ContainsSubstring("unknown parameter"));
}

TEST_CASE("custom sweep grids shrink the row count") {
    TempDir tmp("sweep_grid");
    ExperimentSpec spec;
    spec.world_path = write_world(tmp.path, make_easy_world()).string();
    spec.out_dir = (tmp.path / "out").string();
    spec.seeds = {0, 1};
    spec.overrides = {{"param", "lambda_v"}, {"grid", "0,1"}};

    const SweepOutcome outcome = run_sweep(spec);
    REQUIRE(outcome.records.size() == 4);
    REQUIRE(count_lines(slurp(tmp.path / "out" / "sweep.csv")) == 5);
}

TEST_CASE("train-value fits on plan traces and reruns identically") {
    TempDir tmp("train");
    const fs::path world_path = write_world(tmp.path, make_easy_world());

    ExperimentSpec plan;
    plan.world_path = world_path.string();
    plan.seeds = {0, 1, 2};
    plan.out_dir = (tmp.path / "traces").string();
    const PlanOutcome planned = run_plan(plan);

    ExperimentSpec spec;
    spec.world_path = world_path.string();
    spec.out_dir = (tmp.path / "fit").string();
    for (const fs::path& file : planned.trace_files) {
        spec.trace_paths.push_back(file.string());
    }
    spec.overrides = {{"epochs", "5"}, {"hidden_dim", "8"}, {"batch_size", "64"}};

    const TrainValueOutcome outcome = run_train_value(spec);
    REQUIRE(outcome.pairs > 0);
    REQUIRE(outcome.skipped_traces == 0);
    REQUIRE(outcome.result.loss_curve.size() == 5);
    REQUIRE(outcome.result.loss_curve.back() <= outcome.result.loss_curve.front());
    REQUIRE(fs::exists(tmp.path / "fit" / "dataset.csv"));
    REQUIRE(fs::exists(tmp.path / "fit" / "training_summary.json"));
    REQUIRE(count_lines(slurp(tmp.path / "fit" / "loss_curve.csv")) == 6);

    spec.out_dir = (tmp.path / "fit2").string();
    run_train_value(spec);
    REQUIRE(slurp(tmp.path / "fit" / "value_params.json") ==
            slurp(tmp.path / "fit2" / "value_params.json"));
    REQUIRE(slurp(tmp.path / "fit" / "dataset.csv") ==
            slurp(tmp.path / "fit2" / "dataset.csv"));
}

TEST_CASE("train-value counts skipped traces and rejects empty datasets") {
    TempDir tmp("train_skip");
    const fs::path easy_path = write_world(tmp.path, make_easy_world());

    ExperimentSpec easy_plan;
    easy_plan.world_path = easy_path.string();
    easy_plan.seeds = {0};
    easy_plan.out_dir = (tmp.path / "easy").string();
    const PlanOutcome easy_out = run_plan(easy_plan);

    RunTrace unfinished;
    unfinished.world_id = "easy-1";
    unfinished.intermediate_tokens = {{}, {1}};
    StepRecord step;
    step.root_tokens = {};
    unfinished.steps.push_back(step);
    step.step_index = 1;
    step.root_tokens = {1};
    unfinished.steps.push_back(step);
    const fs::path unfinished_path = tmp.path / "unfinished.jsonl";
    {
        std::ofstream out(unfinished_path);
        write_trace_jsonl(unfinished, out);
    }

    ExperimentSpec spec;
    spec.world_path = easy_path.string();
    spec.out_dir = (tmp.path / "fit").string();
    spec.trace_paths = {easy_out.trace_files[0].string(),
                        unfinished_path.string()};
    spec.overrides = {{"epochs", "1"}, {"hidden_dim", "4"}};
    const TrainValueOutcome outcome = run_train_value(spec);
    REQUIRE(outcome.skipped_traces == 1);

    spec.trace_paths = {unfinished_path.string()};
    REQUIRE_THROWS_WITH(run_train_value(spec),
                        ContainsSubstring("no usable training pairs"));

    spec.trace_paths.clear();
    REQUIRE_THROWS_WITH(run_train_value(spec), ContainsSubstring("--traces"));
}

TEST_CASE("the command line reports success and failure exit codes") {
    const char* cli = std::getenv("SEQPLAN_CLI");
    if (cli == nullptr || *cli == '\0') {
        SKIP("SEQPLAN_CLI is not set");
    }
    TempDir tmp("cli");
    const fs::path world_path = write_world(tmp.path, make_easy_world());
    const fs::path err_path = tmp.path / "stderr.txt";

    const auto run = [&](const std::string& args) {
        const std::string command = std::string("\"") + cli + "\" " + args + " 2>\"" +
                                    err_path.string() + "\"";
        const int status = std::system(command.c_str());
        REQUIRE(WIFEXITED(status));
        return WEXITSTATUS(status);
    };

    REQUIRE(run("plan --world \"" + world_path.string() + "\" --out \"" +
                (tmp.path / "ok").string() + "\"") == 0);
    REQUIRE(fs::exists(tmp.path / "ok" / "trace_0.jsonl"));

    const std::string missing = (tmp.path / "missing.json").string();
    REQUIRE(run("plan --world \"" + missing + "\" --out \"" +
                (tmp.path / "bad").string() + "\"") != 0);
    REQUIRE_THAT(slurp(err_path), ContainsSubstring(missing));

    REQUIRE(run("plan --world \"" + world_path.string() + "\" --out \"" +
                (tmp.path / "bad").string() + "\" --override bogus=1") != 0);
    REQUIRE_THAT(slurp(err_path), ContainsSubstring("unknown override"));

    WorldInstance huge = make_easy_world();
    huge.max_length = 8;
    const fs::path huge_path = write_world(tmp.path, huge);
    REQUIRE(run("oracle --world \"" + huge_path.string() + "\" --out \"" +
                (tmp.path / "bad").string() + "\"") != 0);
    REQUIRE_THAT(slurp(err_path), ContainsSubstring("1679616"));
}
