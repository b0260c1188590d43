#include <algorithm>
#include <cmath>

#include <catch2/catch_amalgamated.hpp>

#include "seqplan/model.hpp"
#include "seqplan/worlds.hpp"

using Catch::Approx;
using namespace seqplan;

namespace {

double policy_sum(const PolicyVector& policy) {
    double sum = 0.0;
    for (double p : policy) sum += p;
    return sum;
}

}  // namespace

TEST_CASE("salient regions are the uncovered ones, heaviest first") {
    const WorldInstance world = make_saliency_world();
    REQUIRE(identify_salient_regions(SequenceState{}, world, 4) ==
            std::vector<std::int32_t>{0, 1, 2, 3});
    REQUIRE(identify_salient_regions(SequenceState{}, world, 2) ==
            std::vector<std::int32_t>{0, 1});

    const SequenceState covered_top = make_state({1, 2}, world);
    REQUIRE(identify_salient_regions(covered_top, world, 4) ==
            std::vector<std::int32_t>{1, 2, 3});

    const SequenceState covered_all = make_state({1, 3, 5, 7}, world);
    REQUIRE(identify_salient_regions(covered_all, world, 4).empty());

    REQUIRE_THROWS_AS(identify_salient_regions(SequenceState{}, world, 0),
                      ValidationError);
}

TEST_CASE("equal-weight regions break ties by region id") {
    WorldInstance world = make_easy_world();
    world.regions = {{7, {1}, 0.25}, {3, {2}, 0.25}, {5, {3}, 0.25}, {1, {4}, 0.25}};
    REQUIRE(identify_salient_regions(SequenceState{}, world, 4) ==
            std::vector<std::int32_t>{1, 3, 5, 7});
}

TEST_CASE("find_region names unknown ids") {
    const WorldInstance world = make_easy_world();
    REQUIRE(find_region(world, 0).saliency_weight == 1.0);
    REQUIRE_THROWS_WITH(find_region(world, 9),
                        Catch::Matchers::ContainsSubstring("region id 9"));
}

TEST_CASE("tabular model boosts the prompted region by a fixed logit") {
    const WorldInstance world = make_easy_world();
    const TabularModel model;
    const ModelOutput out = model.evaluate(0, SequenceState{}, world);

    REQUIRE(out.policy.size() == 6);
    REQUIRE(policy_sum(out.policy) == Approx(1.0).margin(1e-12));
    REQUIRE(out.coarse_value == 0.0);

    // Attribute tokens share one probability, the rest another, and the gap
    // is exactly the exponentiated logit boost.
    REQUIRE(out.policy[1] == out.policy[2]);
    REQUIRE(out.policy[0] == out.policy[3]);
    REQUIRE(out.policy[0] == out.policy[4]);
    REQUIRE(out.policy[0] == out.policy[5]);
    REQUIRE(out.policy[1] / out.policy[0] ==
            Approx(std::exp(2.0)).margin(1e-12));
    REQUIRE(out.policy[1] > out.policy[0]);
}

TEST_CASE("tabular model is region dependent") {
    const WorldInstance world = make_saliency_world();
    const TabularModel model;
    const ModelOutput for_region1 = model.evaluate(1, SequenceState{}, world);
    const ModelOutput for_region3 = model.evaluate(3, SequenceState{}, world);
    REQUIRE(for_region1.policy[3] > for_region1.policy[7]);
    REQUIRE(for_region3.policy[7] > for_region3.policy[3]);
}

TEST_CASE("tabular model makes EOS the unique maximum at full coverage") {
    const WorldInstance world = make_easy_world();
    const TabularModel model;
    const SequenceState covered = make_state({1, 2}, world);
    const ModelOutput out = model.evaluate(0, covered, world);

    REQUIRE(out.coarse_value == 1.0);
    const auto argmax =
        std::max_element(out.policy.begin(), out.policy.end()) - out.policy.begin();
    REQUIRE(argmax == world.eos_token);
    for (TokenId t = 0; t < world.vocab_size; ++t) {
        if (t != world.eos_token) REQUIRE(out.policy[world.eos_token] > out.policy[t]);
    }
}

TEST_CASE("tabular coarse value tracks coverage") {
    const WorldInstance easy = make_easy_world();
    const TabularModel model;
    REQUIRE(model.evaluate(0, make_state({1}, easy), easy).coarse_value == 0.0);

    const WorldInstance world = make_saliency_world();
    REQUIRE(model.evaluate(0, make_state({1}, world), world).coarse_value ==
            Approx(0.9).margin(1e-12));
    REQUIRE(model.evaluate(0, make_state({1, 2, 3}, world), world).coarse_value ==
            Approx(0.94).margin(1e-12));
}

TEST_CASE("bandit model is uniform and single-step only") {
    const WorldInstance world = make_regret_bandit(0.5);
    const BanditModel model;
    const ModelOutput out = model.evaluate(0, SequenceState{}, world);
    REQUIRE(out.policy == PolicyVector{0.25, 0.25, 0.25, 0.25});
    REQUIRE(out.coarse_value == 0.0);

    REQUIRE_THROWS_AS(model.evaluate(0, SequenceState{}, make_easy_world()),
                      ContractViolation);
}

TEST_CASE("bandit model handles a one-token vocabulary") {
    WorldInstance degenerate;
    degenerate.world_id = "k1";
    degenerate.vocab_size = 1;
    degenerate.eos_token = 0;
    degenerate.max_length = 1;
    const BanditModel model;
    REQUIRE(model.evaluate(0, SequenceState{}, degenerate).policy ==
            PolicyVector{1.0});
}
