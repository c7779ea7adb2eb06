#include <gtest/gtest.h>

#include <cmath>
#include <deque>
#include <map>
#include <vector>

#include "beliefroute/delegation.hpp"

using namespace beliefroute;

namespace {

BeliefTable uniform_roster(int n) {
    BeliefTable t;
    for (int i = 1; i <= n; ++i) {
        t["agent" + std::to_string(i)] = BeliefState{};
    }
    return t;
}

/// Sampler that replays scripted draws in roster (map) order.
ThetaSampler scripted(std::deque<double> draws) {
    auto queue = std::make_shared<std::deque<double>>(std::move(draws));
    return [queue](const AgentId&, const BeliefState&, RngStream&) {
        double v = queue->front();
        queue->pop_front();
        return v;
    };
}

}  // namespace

TEST(Select, ArgmaxOfSampledValues) {
    BeliefTable t = uniform_roster(3);
    RngStream rng(1);
    const SelectionOutcome out = select_agent(t, rng, ForcedRelease::min_cooldown,
                                              scripted({0.2, 0.9, 0.4}));
    EXPECT_EQ(out.chosen, "agent2");
    EXPECT_FALSE(out.forced_exploration);
    EXPECT_DOUBLE_EQ(out.sampled_values.at("agent1"), 0.2);
    EXPECT_DOUBLE_EQ(out.sampled_values.at("agent2"), 0.9);
    EXPECT_DOUBLE_EQ(out.sampled_values.at("agent3"), 0.4);
}

TEST(Select, TieGoesToLargerPosteriorMean) {
    BeliefTable t;
    t["agent1"] = BeliefState{1.0, 1.0};  // mean 0.50
    t["agent2"] = BeliefState{4.0, 1.0};  // mean 0.80
    t["agent3"] = BeliefState{1.0, 2.0};  // mean 0.33
    RngStream rng(1);
    const SelectionOutcome out = select_agent(t, rng, ForcedRelease::min_cooldown,
                                              scripted({0.7, 0.7, 0.1}));
    EXPECT_EQ(out.chosen, "agent2");
}

TEST(Select, FullTieGoesToSmallerId) {
    BeliefTable t = uniform_roster(3);
    RngStream rng(1);
    const SelectionOutcome out = select_agent(t, rng, ForcedRelease::min_cooldown,
                                              scripted({0.7, 0.7, 0.7}));
    EXPECT_EQ(out.chosen, "agent1");
}

TEST(Select, AllMaskedReleasesMinCooldown) {
    BeliefTable t = uniform_roster(3);
    t["agent1"].cooldown = 2;
    t["agent2"].cooldown = 1;
    t["agent3"].cooldown = 3;
    RngStream rng(1);
    const SelectionOutcome out = select_agent(t, rng);
    EXPECT_EQ(out.chosen, "agent2");
    EXPECT_TRUE(out.forced_exploration);
    EXPECT_EQ(t["agent2"].cooldown, 0);
    EXPECT_EQ(t["agent1"].cooldown, 2);  // others untouched
    EXPECT_EQ(t["agent3"].cooldown, 3);
    EXPECT_TRUE(std::isinf(out.sampled_values.at("agent1")));
    EXPECT_TRUE(std::isinf(out.sampled_values.at("agent3")));
    EXPECT_TRUE(std::isfinite(out.sampled_values.at("agent2")));
}

TEST(Select, AllMaskedReleasesMaxCooldownWhenConfigured) {
    BeliefTable t = uniform_roster(3);
    t["agent1"].cooldown = 2;
    t["agent2"].cooldown = 1;
    t["agent3"].cooldown = 3;
    RngStream rng(1);
    const SelectionOutcome out = select_agent(t, rng, ForcedRelease::max_cooldown);
    EXPECT_EQ(out.chosen, "agent3");
    EXPECT_TRUE(out.forced_exploration);
}

TEST(Select, ReleaseTieKeepsSmallerId) {
    BeliefTable t = uniform_roster(3);
    for (auto& [id, b] : t) b.cooldown = 2;
    RngStream rng(1);
    EXPECT_EQ(select_agent(t, rng).chosen, "agent1");
}

TEST(Select, MaskedAgentsNeverChosenAndConsumeNoDraws) {
    RngStream rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        BeliefTable t;
        int eligible = 0;
        for (int i = 1; i <= 6; ++i) {
            BeliefState b;
            b.alpha = 0.5 + rng.uniform01() * 5.0;
            b.beta = 0.5 + rng.uniform01() * 5.0;
            b.cooldown = rng.bernoulli(0.5) ? 1 + static_cast<int>(rng.uniform_index(3)) : 0;
            if (b.cooldown == 0) ++eligible;
            t["agent" + std::to_string(i)] = b;
        }
        if (eligible == 0) continue;
        const std::uint64_t before = rng.draws();
        const SelectionOutcome out = select_agent(t, rng);
        ASSERT_EQ(t.at(out.chosen).cooldown, 0);
        ASSERT_FALSE(out.forced_exploration);
        // two gamma draws per eligible agent, none for masked ones
        ASSERT_EQ(rng.draws() - before, static_cast<std::uint64_t>(2 * eligible));
    }
}

// With identical Beta(1,1) posteriors every agent should win about equally
// often. 10^4 trials, expected 2000 each, 3 sigma = 120.
TEST(Select, UniformPriorSelectsUniformly) {
    BeliefTable t = uniform_roster(5);
    RngStream rng(11);
    std::map<AgentId, int> counts;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        counts[select_agent(t, rng).chosen]++;
    }
    for (const auto& [id, c] : counts) {
        EXPECT_GE(c, 2000 - 120) << id;
        EXPECT_LE(c, 2000 + 120) << id;
    }
}

TEST(Select, CooldownOneForcesAlternationBetweenTwoAgents) {
    BeliefTable t = uniform_roster(2);
    RngStream rng(3);
    AgentId prev;
    for (int round = 0; round < 12; ++round) {
        const SelectionOutcome out = select_agent(t, rng);
        if (round > 0) {
            ASSERT_NE(out.chosen, prev) << "round " << round;
        }
        apply_cooldown(t, out.chosen, 1);
        prev = out.chosen;
    }
}

TEST(Select, DeterministicGivenStreamState) {
    BeliefTable t;
    t["a"] = BeliefState{2.0, 3.0};
    t["b"] = BeliefState{3.0, 2.0};
    t["c"] = BeliefState{1.0, 1.0};
    RngStream rng1(99), rng2(99);
    for (int i = 0; i < 50; ++i) {
        BeliefTable t1 = t, t2 = t;
        const SelectionOutcome o1 = select_agent(t1, rng1);
        const SelectionOutcome o2 = select_agent(t2, rng2);
        ASSERT_EQ(o1.chosen, o2.chosen);
        ASSERT_EQ(o1.sampled_values, o2.sampled_values);
    }
}

TEST(Select, EmptyRosterThrows) {
    BeliefTable t;
    RngStream rng(1);
    EXPECT_THROW(select_agent(t, rng), ConfigError);
}

TEST(ApplyCooldown, DecrementThenSet) {
    BeliefTable t = uniform_roster(3);
    t["agent1"].cooldown = 0;
    t["agent2"].cooldown = 3;
    t["agent3"].cooldown = 1;
    apply_cooldown(t, "agent1", 2);
    EXPECT_EQ(t["agent1"].cooldown, 2);
    EXPECT_EQ(t["agent2"].cooldown, 2);
    EXPECT_EQ(t["agent3"].cooldown, 0);
}

TEST(ApplyCooldown, ChosenIsSetNotDecremented) {
    BeliefTable t = uniform_roster(2);
    t["agent1"].cooldown = 5;
    apply_cooldown(t, "agent1", 3);
    EXPECT_EQ(t["agent1"].cooldown, 3);
}

TEST(ApplyCooldown, ZeroRadiusLeavesChosenEligible) {
    BeliefTable t = uniform_roster(2);
    apply_cooldown(t, "agent2", 0);
    EXPECT_EQ(t["agent2"].cooldown, 0);
}

TEST(ApplyCooldown, UnknownAgentThrows) {
    BeliefTable t = uniform_roster(2);
    EXPECT_THROW(apply_cooldown(t, "ghost", 1), ContractViolation);
}

TEST(ApplyCooldown, NeverGoesNegative) {
    BeliefTable t = uniform_roster(4);
    RngStream rng(5);
    for (int round = 0; round < 100; ++round) {
        const SelectionOutcome out = select_agent(t, rng);
        apply_cooldown(t, out.chosen, 2);
        for (const auto& [id, b] : t) {
            ASSERT_GE(b.cooldown, 0);
        }
    }
}
