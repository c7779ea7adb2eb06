#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include "beliefroute/experiments.hpp"

using namespace beliefroute;

namespace {

TaskStreamConfig two_domain_stream(int count, std::uint64_t seed = 7) {
    TaskStreamConfig cfg;
    cfg.count = count;
    cfg.embedding_dim = 8;
    cfg.seed = seed;
    cfg.noise = 0.05;
    cfg.domains = {{"math", 1.0}, {"retrieval", 1.0}};
    return cfg;
}

ControllerConfig small_controller() {
    ControllerConfig cfg;
    cfg.max_depth = 6;
    cfg.budget = 12.0;
    cfg.cooldown = 1;
    return cfg;
}

}  // namespace

TEST(GenerateTasks, DeterministicPerSeed) {
    const auto a = generate_tasks(two_domain_stream(30));
    const auto b = generate_tasks(two_domain_stream(30));
    ASSERT_EQ(a.size(), 30u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        ASSERT_EQ(a[i].embedding, b[i].embedding);
        ASSERT_EQ(a[i].required_domains, b[i].required_domains);
        ASSERT_EQ(a[i].index, static_cast<long>(i));
    }
    const auto c = generate_tasks(two_domain_stream(30, 8));
    EXPECT_NE(a[0].embedding, c[0].embedding);
}

TEST(GenerateTasks, EmbeddingsAreUnitNorm) {
    for (const SimTaskSpec& t : generate_tasks(two_domain_stream(50))) {
        double norm = 0.0;
        for (double x : t.embedding) norm += x * x;
        ASSERT_NEAR(norm, 1.0, 1e-9);
        ASSERT_EQ(t.embedding.size(), 8u);
    }
}

TEST(GenerateTasks, LabelsFollowWeights) {
    TaskStreamConfig cfg = two_domain_stream(60);
    for (const SimTaskSpec& t : generate_tasks(cfg)) {
        ASSERT_EQ(t.required_domains.size(), 1u);
        const std::string label = *t.required_domains.begin();
        ASSERT_TRUE(label == "math" || label == "retrieval");
    }
    cfg.domains = {{"math", 1.0}, {"retrieval", 0.0}};
    for (const SimTaskSpec& t : generate_tasks(cfg)) {
        ASSERT_EQ(*t.required_domains.begin(), "math");
    }
    cfg.domains.clear();  // falls back to one anonymous domain
    for (const SimTaskSpec& t : generate_tasks(cfg)) {
        ASSERT_EQ(*t.required_domains.begin(), "task");
    }
}

TEST(GenerateTasks, SameDomainTasksCluster) {
    const auto tasks = generate_tasks(two_domain_stream(80));
    double within = 0.0, across = 0.0;
    int n_within = 0, n_across = 0;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        for (std::size_t j = i + 1; j < tasks.size(); ++j) {
            const double sim =
                similarity(tasks[i].embedding, tasks[j].embedding, Kernel::cosine);
            if (tasks[i].required_domains == tasks[j].required_domains) {
                within += sim;
                ++n_within;
            } else {
                across += sim;
                ++n_across;
            }
        }
    }
    ASSERT_GT(n_within, 0);
    ASSERT_GT(n_across, 0);
    EXPECT_GT(within / n_within, across / n_across + 0.3);
}

TEST(GenerateTasks, Validation) {
    TaskStreamConfig cfg = two_domain_stream(10);
    cfg.count = 0;
    EXPECT_THROW(generate_tasks(cfg), ConfigError);
    cfg = two_domain_stream(10);
    cfg.embedding_dim = 0;
    EXPECT_THROW(generate_tasks(cfg), ConfigError);
    cfg = two_domain_stream(10);
    cfg.noise = -0.1;
    EXPECT_THROW(generate_tasks(cfg), ConfigError);
    cfg = two_domain_stream(10);
    cfg.domains = {{"a", 0.0}, {"b", 0.0}};
    EXPECT_THROW(generate_tasks(cfg), ConfigError);
}

TEST(EnvelopeFor, CarriesIndexAsTime) {
    SimTaskSpec task;
    task.index = 3;
    task.embedding = {0.6, 0.8};
    const TaskEnvelope env = envelope_for(task);
    EXPECT_EQ(env.query, "task 3");
    EXPECT_DOUBLE_EQ(env.time, 3.0);
    EXPECT_EQ(env.embedding, task.embedding);
    EXPECT_EQ(env.refinement_count, 0);
}

TEST(RunSession, PerfectAgentSolvesEverythingFirstRound) {
    const std::vector<SimAgentSpec> specs{SimAgentSpec::constant("ace", 1.0)};
    TaskStreamConfig stream;
    stream.count = 10;
    stream.embedding_dim = 4;
    const auto tasks = generate_tasks(stream);
    const SessionResult res = run_session(specs, small_controller(), tasks, 42, Policy::thompson);
    EXPECT_EQ(res.rows.size(), 10u);
    EXPECT_DOUBLE_EQ(res.success_rate, 1.0);
    EXPECT_DOUBLE_EQ(res.mean_rounds, 1.0);
    EXPECT_DOUBLE_EQ(res.mean_cost, 1.0);
    EXPECT_EQ(res.store.size(), 10u);
    // nine remembered successes seed the final prior well past (1, 1)
    EXPECT_GT(res.last_beliefs.at("ace").alpha, 2.0);
    EXPECT_DOUBLE_EQ(res.last_beliefs.at("ace").beta, 1.0);
}

TEST(RunSession, DeterministicIncludingEventLog) {
    const std::vector<SimAgentSpec> specs{SimAgentSpec::constant("a", 0.7),
                                          SimAgentSpec::constant("b", 0.4)};
    TaskStreamConfig stream;
    stream.count = 12;
    stream.embedding_dim = 4;
    const auto tasks = generate_tasks(stream);

    JsonlStringBuffer ev1, ev2;
    const SessionResult r1 = run_session(specs, small_controller(), tasks, 9, Policy::thompson, &ev1);
    const SessionResult r2 = run_session(specs, small_controller(), tasks, 9, Policy::thompson, &ev2);
    ASSERT_EQ(r1.rows.size(), r2.rows.size());
    for (std::size_t i = 0; i < r1.rows.size(); ++i) {
        ASSERT_EQ(r1.rows[i].rounds, r2.rows[i].rounds);
        ASSERT_DOUBLE_EQ(r1.rows[i].cost, r2.rows[i].cost);
        ASSERT_EQ(r1.rows[i].success, r2.rows[i].success);
    }
    EXPECT_EQ(ev1.str(), ev2.str());
    EXPECT_FALSE(ev1.str().empty());
}

TEST(RoundsToExpert, FirstSelectionRoundOrCensored) {
    EpisodeResult res;
    res.rounds_used = 3;
    res.selections = {{1, "a", {}}, {2, "b", {}}, {3, "c", {}}};
    EXPECT_EQ(rounds_to_expert(res, "a"), 1);
    EXPECT_EQ(rounds_to_expert(res, "b"), 2);
    EXPECT_EQ(rounds_to_expert(res, "zzz"), 4);  // never selected
}

TEST(Efficiency, ThompsonAvoidsWeakAgents) {
    const std::vector<SimAgentSpec> specs{
        SimAgentSpec::constant("strong", 0.9), SimAgentSpec::constant("weak1", 0.1),
        SimAgentSpec::constant("weak2", 0.1), SimAgentSpec::constant("weak3", 0.1)};
    TaskStreamConfig stream;
    stream.count = 60;
    stream.embedding_dim = 4;
    ControllerConfig cfg = small_controller();
    cfg.max_depth = 8;
    cfg.budget = 16.0;
    cfg.plateau_window = 10;
    const auto tasks = generate_tasks(stream);
    const EfficiencyResult res = run_efficiency_experiment(specs, cfg, tasks, 11);

    EXPECT_LT(res.mean_low_ts, res.mean_low_rand);
    EXPECT_LT(res.mean_calls_ts, res.mean_calls_rand);
    EXPECT_LT(res.p_low_calls, 0.05);
    EXPECT_LT(res.low_diff_ci.hi, 0.0);  // CI of (ts - rand) sits below zero
    EXPECT_GT(res.thompson.success_rate, 0.8);
}

TEST(Impairment, SelectionsCollapseAfterFlip) {
    std::vector<SimAgentSpec> specs{SimAgentSpec::constant("steady1", 0.5),
                                    SimAgentSpec::constant("steady2", 0.5),
                                    SimAgentSpec::constant("steady3", 0.5)};
    SimAgentSpec flaky;
    flaky.id = "flaky";
    flaky.schedule = {{0, 0.9}, {10, 0.05}};
    specs.push_back(flaky);

    TaskStreamConfig stream;
    stream.count = 20;
    stream.embedding_dim = 4;
    const auto tasks = generate_tasks(stream);
    const ImpairmentResult res =
        run_impairment_experiment(specs, "flaky", 10, small_controller(), tasks, 12, 3);

    ASSERT_EQ(res.rows.size(), 12u);
    ASSERT_EQ(res.mean_belief_by_task.size(), 20u);
    ASSERT_EQ(res.selection_rate_by_task.size(), 20u);
    EXPECT_LT(res.mean_phase2_selections, res.mean_phase1_selections);
    // posterior on the flaky agent ends far below where it peaked
    EXPECT_LT(res.mean_belief_by_task.back(), res.mean_belief_by_task[9] - 0.2);
    EXPECT_GE(res.median_selections_to_below_half, 1.0);
    for (const ImpairmentRow& r : res.rows) {
        ASSERT_LE(r.selections_to_below_half, r.phase2_selections + 1);
    }
}

TEST(Impairment, UnknownAgentRejected) {
    const std::vector<SimAgentSpec> specs{SimAgentSpec::constant("a", 0.5)};
    const auto tasks = generate_tasks(two_domain_stream(4));
    EXPECT_THROW(
        run_impairment_experiment(specs, "ghost", 2, small_controller(), tasks, 2, 3),
        ConfigError);
}

TEST(Impairment, ThreadCountDoesNotChangeRowsOrEvents) {
    std::vector<SimAgentSpec> specs{SimAgentSpec::constant("a", 0.5),
                                    SimAgentSpec::constant("b", 0.5)};
    SimAgentSpec flaky;
    flaky.id = "flaky";
    flaky.schedule = {{0, 0.9}, {6, 0.1}};
    specs.push_back(flaky);
    TaskStreamConfig stream;
    stream.count = 12;
    stream.embedding_dim = 4;
    const auto tasks = generate_tasks(stream);

    std::ostringstream ev1, ev3;
    const ImpairmentResult serial = run_impairment_experiment(specs, "flaky", 6, small_controller(),
                                                              tasks, 9, 5, 1, &ev1);
    const ImpairmentResult threaded = run_impairment_experiment(
        specs, "flaky", 6, small_controller(), tasks, 9, 5, 3, &ev3);

    EXPECT_EQ(ev1.str(), ev3.str());
    ASSERT_EQ(serial.rows.size(), threaded.rows.size());
    for (std::size_t i = 0; i < serial.rows.size(); ++i) {
        ASSERT_EQ(serial.rows[i].phase1_selections, threaded.rows[i].phase1_selections);
        ASSERT_EQ(serial.rows[i].phase2_selections, threaded.rows[i].phase2_selections);
        ASSERT_EQ(serial.rows[i].selections_to_below_half,
                  threaded.rows[i].selections_to_below_half);
        ASSERT_DOUBLE_EQ(serial.rows[i].phase2_quality, threaded.rows[i].phase2_quality);
    }
    EXPECT_EQ(serial.mean_belief_by_task, threaded.mean_belief_by_task);
}

TEST(Specialization, ExpertFoundFasterWithExperience) {
    std::vector<SimAgentSpec> specs{
        SimAgentSpec::constant("expert", 0.3, "retrieval", 0.55),
        SimAgentSpec::constant("peer1", 0.3), SimAgentSpec::constant("peer2", 0.3),
        SimAgentSpec::constant("peer3", 0.3)};
    TaskStreamConfig stream;
    stream.count = 20;
    stream.embedding_dim = 6;
    stream.noise = 0.02;
    stream.domains = {{"retrieval", 1.0}};
    const auto tasks = generate_tasks(stream);
    const SpecializationResult res =
        run_specialization_experiment(specs, "expert", small_controller(), tasks, 12, 21);

    ASSERT_EQ(res.rows.size(), 12u);
    ASSERT_EQ(res.mean_rounds_by_task.size(), 20u);
    EXPECT_LT(res.second_half_mean, res.first_half_mean);
    for (const SpecializationRow& r : res.rows) {
        ASSERT_GE(r.first_half_mean, 1.0);  // rounds are 1-based
        ASSERT_GE(r.second_half_mean, 1.0);
    }
}

TEST(Specialization, UnknownExpertRejected) {
    const std::vector<SimAgentSpec> specs{SimAgentSpec::constant("a", 0.5)};
    const auto tasks = generate_tasks(two_domain_stream(4));
    EXPECT_THROW(
        run_specialization_experiment(specs, "ghost", small_controller(), tasks, 2, 3),
        ConfigError);
}

TEST(MemoryPriors, HistorySteersFirstSelection) {
    const std::vector<SimAgentSpec> specs{
        SimAgentSpec::constant("anchor", 0.95), SimAgentSpec::constant("drift1", 0.05),
        SimAgentSpec::constant("drift2", 0.05), SimAgentSpec::constant("drift3", 0.05)};
    TaskStreamConfig stream;
    stream.count = 8;
    stream.embedding_dim = 4;
    stream.noise = 0.02;
    const auto tasks = generate_tasks(stream);
    const MemoryPriorResult res =
        run_memory_prior_experiment(specs, "anchor", small_controller(), tasks, 24, 5);

    ASSERT_EQ(res.rows.size(), 24u);
    EXPECT_GT(res.rate_with, res.rate_without);
    for (const MemoryPriorRow& r : res.rows) {
        ASSERT_TRUE(r.with_memory == 0 || r.with_memory == 1);
        ASSERT_TRUE(r.without_memory == 0 || r.without_memory == 1);
    }
}

TEST(MemoryPriors, NeedsPhaseOnePlusProbe) {
    const std::vector<SimAgentSpec> specs{SimAgentSpec::constant("a", 0.5)};
    const auto tasks = generate_tasks(two_domain_stream(4));
    const std::vector<SimTaskSpec> single(tasks.begin(), tasks.begin() + 1);
    EXPECT_THROW(
        run_memory_prior_experiment(specs, "a", small_controller(), single, 2, 3),
        ConfigError);
}

TEST(RegretSweep, NoisierChannelsAccrueMoreRegret) {
    const std::vector<double> thetas{0.8, 0.4};
    const std::vector<std::pair<double, double>> sweep{{0.0, 0.0}, {0.375, 0.375}};
    const RegretSweepResult res = run_regret_sweep(thetas, sweep, 1500, 24, 13, 2);
    ASSERT_EQ(res.conditions.size(), 2u);
    EXPECT_DOUBLE_EQ(res.conditions[0].delta, 1.0);
    EXPECT_DOUBLE_EQ(res.conditions[1].delta, 0.25);
    EXPECT_GT(res.conditions[1].mean_final, res.conditions[0].mean_final);
    EXPECT_EQ(res.conditions[0].final_per_seed.size(), 24u);
    EXPECT_LE(res.conditions[0].ci.lo, res.conditions[0].mean_final);
    EXPECT_GE(res.conditions[0].ci.hi, res.conditions[0].mean_final);
}

TEST(RegretSweep, RejectsDegenerateChannelAndEmptySweep) {
    const std::vector<double> thetas{0.8, 0.4};
    const std::vector<std::pair<double, double>> bad{{0.5, 0.5}};
    EXPECT_THROW(run_regret_sweep(thetas, bad, 100, 2, 1), ConfigError);
    const std::vector<std::pair<double, double>> empty;
    EXPECT_THROW(run_regret_sweep(thetas, empty, 100, 2, 1), ConfigError);
}
