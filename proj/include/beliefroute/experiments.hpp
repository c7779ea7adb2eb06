#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "beliefroute/controller.hpp"
#include "beliefroute/event_log.hpp"
#include "beliefroute/parallel.hpp"
#include "beliefroute/simulation.hpp"
#include "beliefroute/stats.hpp"

namespace beliefroute {

struct DomainMix {
    std::string label;
    double weight = 1.0;
};

/// Synthetic task generator: every domain gets a fixed unit-vector cluster
/// center; task embeddings are noisy copies of their domain center.
struct TaskStreamConfig {
    int count = 100;
    int embedding_dim = 8;
    std::uint64_t seed = 7;
    double noise = 0.05;
    std::vector<DomainMix> domains;  // empty -> one anonymous domain "task"

    void validate() const {
        if (count < 1) throw ConfigError("task_stream.count must be >= 1");
        if (embedding_dim < 1) throw ConfigError("task_stream.embedding_dim must be >= 1");
        if (noise < 0.0) throw ConfigError("task_stream.noise must be >= 0");
        double total = 0.0;
        for (const DomainMix& d : domains) {
            if (d.weight < 0.0) throw ConfigError("task_stream domain weight must be >= 0");
            total += d.weight;
        }
        if (!domains.empty() && total <= 0.0) {
            throw ConfigError("task_stream domain weights must not all be zero");
        }
    }
};

namespace detail {

inline std::vector<double> unit_vector(RngStream rng, int dim) {
    std::vector<double> v(dim);
    double norm = 0.0;
    for (double& x : v) {
        x = rng.normal();
        norm += x * x;
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) {
        v[0] = 1.0;
        return v;
    }
    for (double& x : v) x /= norm;
    return v;
}

}  // namespace detail

inline std::vector<SimTaskSpec> generate_tasks(const TaskStreamConfig& cfg) {
    cfg.validate();
    std::vector<DomainMix> domains = cfg.domains;
    if (domains.empty()) domains.push_back({"task", 1.0});

    RngStream root(cfg.seed, 0x7a5c);
    std::vector<std::vector<double>> centers;
    centers.reserve(domains.size());
    for (const DomainMix& d : domains) {
        centers.push_back(detail::unit_vector(root.substream("center").substream(d.label),
                                              cfg.embedding_dim));
    }
    double total_weight = 0.0;
    for (const DomainMix& d : domains) total_weight += d.weight;

    RngStream draw = root.substream("tasks");
    std::vector<SimTaskSpec> tasks;
    tasks.reserve(cfg.count);
    for (int i = 0; i < cfg.count; ++i) {
        const double u = draw.uniform01() * total_weight;
        std::size_t pick = 0;
        double acc = 0.0;
        for (std::size_t d = 0; d < domains.size(); ++d) {
            acc += domains[d].weight;
            if (u < acc) {
                pick = d;
                break;
            }
        }
        SimTaskSpec task;
        task.index = i;
        task.required_domains = {domains[pick].label};
        task.embedding = centers[pick];
        double norm = 0.0;
        for (double& x : task.embedding) {
            x += cfg.noise * draw.normal();
            norm += x * x;
        }
        norm = std::sqrt(norm);
        for (double& x : task.embedding) x /= norm;
        tasks.push_back(std::move(task));
    }
    return tasks;
}

inline TaskEnvelope envelope_for(const SimTaskSpec& task) {
    TaskEnvelope env;
    env.query = "task " + std::to_string(task.index);
    env.embedding = task.embedding;
    env.time = static_cast<double>(task.index);
    return env;
}

// ---------------------------------------------------------------------------
// Episode sessions

enum class Policy { thompson, random };

inline const char* to_string(Policy p) {
    return p == Policy::thompson ? "thompson" : "random";
}

struct EpisodeRow {
    int episode = 0;
    int success = 0;
    int rounds = 0;
    double cost = 0.0;
    double low_theta_calls = 0.0;
    double calls_to_success = 0.0;  // censored at episode length when no success
    double answer_score = 0.0;
};

struct SessionResult {
    std::vector<EpisodeRow> rows;
    double success_rate = 0.0;
    double mean_rounds = 0.0;
    double mean_cost = 0.0;
    BeliefTable last_beliefs;
    MemoryStore store;
};

/// Run one session: a stream of tasks routed sequentially over a shared,
/// growing memory. Beliefs carry across tasks through memory-seeded priors.
inline SessionResult run_session(std::span<const SimAgentSpec> specs,
                                 const ControllerConfig& cfg, std::span<const SimTaskSpec> tasks,
                                 std::uint64_t master_seed, Policy policy,
                                 EventSink* events = nullptr, std::uint64_t session_id = 0) {
    SessionResult out;
    RngStream root =
        RngStream(master_seed).substream("session").substream(session_id).substream(
            to_string(policy));
    double succ = 0.0, rounds = 0.0, cost = 0.0;
    for (std::size_t e = 0; e < tasks.size(); ++e) {
        const SimTaskSpec& task = tasks[e];
        const Roster roster = make_roster(specs, task);
        RngStream rng = root.substream(e);
        const TaskEnvelope env = envelope_for(task);
        const EpisodeResult res =
            policy == Policy::thompson
                ? run_episode(env, roster, out.store, cfg, rng, events, {}, static_cast<int>(e))
                : run_random_baseline(env, roster, out.store, cfg, rng, events,
                                      static_cast<int>(e));

        EpisodeRow row;
        row.episode = static_cast<int>(e);
        row.success = res.status == EpisodeStatus::success ? 1 : 0;
        row.rounds = res.rounds_used;
        row.cost = res.cost_spent;
        for (const RoundRecord& r : res.selections) {
            for (const SimAgentSpec& s : specs) {
                if (s.id == r.agent && effective_theta(s, task) < 0.5) {
                    row.low_theta_calls += 1.0;
                }
            }
        }
        row.calls_to_success = static_cast<double>(res.rounds_used);
        row.answer_score = res.answer_score.value_or(0.0);
        out.rows.push_back(row);

        succ += row.success;
        rounds += row.rounds;
        cost += row.cost;
        if (e + 1 == tasks.size()) out.last_beliefs = res.final_beliefs;
    }
    const double n = static_cast<double>(tasks.size());
    out.success_rate = succ / n;
    out.mean_rounds = rounds / n;
    out.mean_cost = cost / n;
    return out;
}

// ---------------------------------------------------------------------------
// Efficiency: Thompson routing vs Random Delegation on the same task stream

struct EfficiencyResult {
    SessionResult thompson;
    SessionResult random;
    double mean_low_ts = 0.0, mean_low_rand = 0.0;
    double mean_calls_ts = 0.0, mean_calls_rand = 0.0;
    double p_low_calls = 1.0, p_total_calls = 1.0;
    Interval low_diff_ci, calls_diff_ci;
};

inline EfficiencyResult run_efficiency_experiment(std::span<const SimAgentSpec> specs,
                                                  const ControllerConfig& cfg,
                                                  std::span<const SimTaskSpec> tasks,
                                                  std::uint64_t master_seed,
                                                  EventSink* ts_events = nullptr,
                                                  EventSink* rand_events = nullptr,
                                                  std::uint64_t session_id = 0) {
    EfficiencyResult out;
    out.thompson =
        run_session(specs, cfg, tasks, master_seed, Policy::thompson, ts_events, session_id);
    out.random =
        run_session(specs, cfg, tasks, master_seed, Policy::random, rand_events, session_id);

    const std::size_t n = tasks.size();
    std::vector<double> low_ts(n), low_rand(n), calls_ts(n), calls_rand(n);
    std::vector<double> low_diff(n), calls_diff(n);
    for (std::size_t i = 0; i < n; ++i) {
        low_ts[i] = out.thompson.rows[i].low_theta_calls;
        low_rand[i] = out.random.rows[i].low_theta_calls;
        calls_ts[i] = out.thompson.rows[i].calls_to_success;
        calls_rand[i] = out.random.rows[i].calls_to_success;
        low_diff[i] = low_ts[i] - low_rand[i];
        calls_diff[i] = calls_ts[i] - calls_rand[i];
    }
    out.mean_low_ts = mean(low_ts);
    out.mean_low_rand = mean(low_rand);
    out.mean_calls_ts = mean(calls_ts);
    out.mean_calls_rand = mean(calls_rand);
    out.p_low_calls = paired_bootstrap_p(low_diff);
    out.p_total_calls = paired_bootstrap_p(calls_diff);
    out.low_diff_ci = bootstrap_mean_ci(low_diff);
    out.calls_diff_ci = bootstrap_mean_ci(calls_diff);
    return out;
}

// ---------------------------------------------------------------------------
// Impairment: one agent degrades mid-stream; routing must notice

struct ImpairmentRow {
    int seed = 0;
    int phase1_selections = 0;
    int phase2_selections = 0;
    /// Impaired-agent selections after the flip until its post-episode
    /// posterior mean first falls below 0.5 (phase2_selections + 1 if never).
    int selections_to_below_half = 0;
    double phase1_quality = 0.0;
    double phase2_quality = 0.0;
};

struct ImpairmentResult {
    std::vector<ImpairmentRow> rows;
    std::vector<double> mean_belief_by_task;     // impaired agent, averaged over seeds
    std::vector<double> selection_rate_by_task;  // impaired agent
    double median_selections_to_below_half = 0.0;
    double mean_phase1_selections = 0.0, mean_phase2_selections = 0.0;
    double mean_phase1_quality = 0.0, mean_phase2_quality = 0.0;
};

inline ImpairmentResult run_impairment_experiment(std::span<const SimAgentSpec> specs,
                                                  const AgentId& impaired, long flip_at,
                                                  const ControllerConfig& cfg,
                                                  std::span<const SimTaskSpec> tasks, int seeds,
                                                  std::uint64_t master_seed, int threads = 1,
                                                  std::ostream* events = nullptr,
                                                  int seed_offset = 0) {
    bool found = false;
    for (const SimAgentSpec& s : specs) found = found || s.id == impaired;
    if (!found) throw ConfigError("impairment: impaired agent '" + impaired + "' not in roster");

    const std::size_t n_tasks = tasks.size();
    ImpairmentResult out;
    out.rows.resize(seeds);
    std::vector<std::vector<double>> beliefs_by_task(seeds);
    std::vector<std::vector<int>> selected_by_task(seeds);
    std::vector<std::string> logs(seeds);

    parallel_for_index(seeds, threads, [&](int s) {
        JsonlStringBuffer sink;
        MemoryStore store;
        RngStream root = RngStream(master_seed).substream("impairment").substream(
            static_cast<std::uint64_t>(seed_offset + s));
        ImpairmentRow row;
        row.seed = seed_offset + s;
        auto& beliefs_track = beliefs_by_task[s];
        auto& selected_track = selected_by_task[s];
        double q1 = 0.0, q2 = 0.0;
        long n1 = 0, n2 = 0;
        bool dropped = false;
        for (std::size_t e = 0; e < n_tasks; ++e) {
            const SimTaskSpec& task = tasks[e];
            const Roster roster = make_roster(specs, task);
            RngStream rng = root.substream(e);
            const EpisodeResult res =
                run_episode(envelope_for(task), roster, store, cfg, rng,
                            events != nullptr ? &sink : nullptr, {}, static_cast<int>(e));
            int picks = 0;
            for (const RoundRecord& r : res.selections) picks += r.agent == impaired ? 1 : 0;
            const bool post = task.index >= flip_at;
            (post ? row.phase2_selections : row.phase1_selections) += picks;
            (post ? q2 : q1) += res.answer_score.value_or(0.0);
            (post ? n2 : n1) += 1;
            const double mu = posterior_mean(res.final_beliefs.at(impaired));
            beliefs_track.push_back(mu);
            selected_track.push_back(picks > 0 ? 1 : 0);
            if (post && !dropped) {
                row.selections_to_below_half += picks;
                if (mu < 0.5) dropped = true;
            }
        }
        if (!dropped) row.selections_to_below_half = row.phase2_selections + 1;
        row.phase1_quality = n1 > 0 ? q1 / n1 : 0.0;
        row.phase2_quality = n2 > 0 ? q2 / n2 : 0.0;
        out.rows[s] = row;
        logs[s] = sink.str();
    });

    if (events != nullptr) {
        for (const std::string& log : logs) *events << log;
    }

    out.mean_belief_by_task.assign(n_tasks, 0.0);
    out.selection_rate_by_task.assign(n_tasks, 0.0);
    for (int s = 0; s < seeds; ++s) {
        for (std::size_t e = 0; e < n_tasks; ++e) {
            out.mean_belief_by_task[e] += beliefs_by_task[s][e];
            out.selection_rate_by_task[e] += selected_by_task[s][e];
        }
    }
    for (std::size_t e = 0; e < n_tasks; ++e) {
        out.mean_belief_by_task[e] /= seeds;
        out.selection_rate_by_task[e] /= seeds;
    }
    std::vector<double> to_half, p1, p2, q1, q2;
    for (const ImpairmentRow& r : out.rows) {
        to_half.push_back(r.selections_to_below_half);
        p1.push_back(r.phase1_selections);
        p2.push_back(r.phase2_selections);
        q1.push_back(r.phase1_quality);
        q2.push_back(r.phase2_quality);
    }
    out.median_selections_to_below_half = median(to_half);
    out.mean_phase1_selections = mean(p1);
    out.mean_phase2_selections = mean(p2);
    out.mean_phase1_quality = mean(q1);
    out.mean_phase2_quality = mean(q2);
    return out;
}

// ---------------------------------------------------------------------------
// Specialization: rounds until the domain expert is selected, over a stream

struct SpecializationRow {
    int seed = 0;
    double first_half_mean = 0.0;
    double second_half_mean = 0.0;
};

struct SpecializationResult {
    std::vector<SpecializationRow> rows;
    std::vector<double> mean_rounds_by_task;
    double first_half_mean = 0.0, second_half_mean = 0.0;
    Interval first_half_ci, second_half_ci;
    bool cis_disjoint = false;
};

/// Rounds-to-expert for one episode: the first round at which `expert` was
/// selected, or rounds_used + 1 when the episode ended without it.
inline int rounds_to_expert(const EpisodeResult& res, const AgentId& expert) {
    for (const RoundRecord& r : res.selections) {
        if (r.agent == expert) return r.round;
    }
    return res.rounds_used + 1;
}

inline SpecializationResult run_specialization_experiment(
    std::span<const SimAgentSpec> specs, const AgentId& expert, const ControllerConfig& cfg,
    std::span<const SimTaskSpec> tasks, int seeds, std::uint64_t master_seed, int threads = 1,
    std::ostream* events = nullptr, int seed_offset = 0) {
    bool found = false;
    for (const SimAgentSpec& s : specs) found = found || s.id == expert;
    if (!found) throw ConfigError("specialization: expert '" + expert + "' not in roster");

    const std::size_t n_tasks = tasks.size();
    SpecializationResult out;
    out.rows.resize(seeds);
    std::vector<std::vector<double>> rounds_by_task(seeds);
    std::vector<std::string> logs(seeds);

    parallel_for_index(seeds, threads, [&](int s) {
        JsonlStringBuffer sink;
        MemoryStore store;
        RngStream root = RngStream(master_seed).substream("specialization").substream(
            static_cast<std::uint64_t>(seed_offset + s));
        auto& track = rounds_by_task[s];
        for (std::size_t e = 0; e < n_tasks; ++e) {
            const Roster roster = make_roster(specs, tasks[e]);
            RngStream rng = root.substream(e);
            const EpisodeResult res =
                run_episode(envelope_for(tasks[e]), roster, store, cfg, rng,
                            events != nullptr ? &sink : nullptr, {}, static_cast<int>(e));
            track.push_back(rounds_to_expert(res, expert));
        }
        const std::size_t half = n_tasks / 2;
        double a = 0.0, b = 0.0;
        for (std::size_t e = 0; e < half; ++e) a += track[e];
        for (std::size_t e = half; e < n_tasks; ++e) b += track[e];
        out.rows[s] = {seed_offset + s, a / half, b / static_cast<double>(n_tasks - half)};
        logs[s] = sink.str();
    });

    if (events != nullptr) {
        for (const std::string& log : logs) *events << log;
    }

    out.mean_rounds_by_task.assign(n_tasks, 0.0);
    for (int s = 0; s < seeds; ++s) {
        for (std::size_t e = 0; e < n_tasks; ++e) out.mean_rounds_by_task[e] += rounds_by_task[s][e];
    }
    for (std::size_t e = 0; e < n_tasks; ++e) out.mean_rounds_by_task[e] /= seeds;

    std::vector<double> first, second;
    for (const SpecializationRow& r : out.rows) {
        first.push_back(r.first_half_mean);
        second.push_back(r.second_half_mean);
    }
    out.first_half_mean = mean(first);
    out.second_half_mean = mean(second);
    out.first_half_ci = bootstrap_mean_ci(first);
    out.second_half_ci = bootstrap_mean_ci(second);
    out.cis_disjoint = !out.first_half_ci.overlaps(out.second_half_ci);
    return out;
}

// ---------------------------------------------------------------------------
// Memory priors: does phase-1 history steer phase-2 first selections?

struct MemoryPriorRow {
    int seed = 0;
    int with_memory = 0;     // target agent selected in round 1
    int without_memory = 0;  // same task, uninformative priors
};

struct MemoryPriorResult {
    std::vector<MemoryPriorRow> rows;
    double rate_with = 0.0, rate_without = 0.0;
    double p_value = 1.0;
};

inline MemoryPriorResult run_memory_prior_experiment(std::span<const SimAgentSpec> specs,
                                                     const AgentId& target,
                                                     const ControllerConfig& cfg,
                                                     std::span<const SimTaskSpec> tasks,
                                                     int seeds, std::uint64_t master_seed,
                                                     int threads = 1,
                                                     std::ostream* events = nullptr,
                                                     int seed_offset = 0) {
    if (tasks.size() < 2) {
        throw ConfigError("memory_priors: need at least two tasks (phase 1 + probe)");
    }
    MemoryPriorResult out;
    out.rows.resize(seeds);
    std::vector<std::string> logs(seeds);

    parallel_for_index(seeds, threads, [&](int s) {
        JsonlStringBuffer sink;
        EventSink* ev = events != nullptr ? &sink : nullptr;
        RngStream root = RngStream(master_seed).substream("memory_priors").substream(
            static_cast<std::uint64_t>(seed_offset + s));
        MemoryStore store;
        const std::size_t probe = tasks.size() - 1;
        for (std::size_t e = 0; e < probe; ++e) {
            const Roster roster = make_roster(specs, tasks[e]);
            RngStream rng = root.substream(e);
            run_episode(envelope_for(tasks[e]), roster, store, cfg, rng, ev, {},
                        static_cast<int>(e));
        }
        const Roster roster = make_roster(specs, tasks[probe]);
        MemoryPriorRow row;
        row.seed = seed_offset + s;
        {
            RngStream rng = root.substream("probe_with");
            const EpisodeResult res = run_episode(envelope_for(tasks[probe]), roster, store, cfg,
                                                  rng, ev, {}, static_cast<int>(probe));
            row.with_memory =
                !res.selections.empty() && res.selections.front().agent == target ? 1 : 0;
        }
        {
            MemoryStore empty;
            RngStream rng = root.substream("probe_without");
            const EpisodeResult res = run_episode(envelope_for(tasks[probe]), roster, empty, cfg,
                                                  rng, ev, {}, static_cast<int>(probe));
            row.without_memory =
                !res.selections.empty() && res.selections.front().agent == target ? 1 : 0;
        }
        out.rows[s] = row;
        logs[s] = sink.str();
    });

    if (events != nullptr) {
        for (const std::string& log : logs) *events << log;
    }

    std::vector<double> diffs;
    double with_sum = 0.0, without_sum = 0.0;
    for (const MemoryPriorRow& r : out.rows) {
        with_sum += r.with_memory;
        without_sum += r.without_memory;
        diffs.push_back(static_cast<double>(r.with_memory - r.without_memory));
    }
    out.rate_with = with_sum / seeds;
    out.rate_without = without_sum / seeds;
    out.p_value = paired_bootstrap_p(diffs);
    return out;
}

// ---------------------------------------------------------------------------
// Regret sweep over judge channels

struct RegretSweepCondition {
    double eps_fp = 0.0;
    double eps_fn = 0.0;
    double delta = 1.0;
    double mean_final = 0.0;
    Interval ci;
    std::vector<double> final_per_seed;
};

struct RegretSweepResult {
    std::vector<RegretSweepCondition> conditions;
};

inline RegretSweepResult run_regret_sweep(std::span<const double> thetas,
                                          std::span<const std::pair<double, double>> sweep,
                                          long horizon, int seeds, std::uint64_t master_seed,
                                          int threads = 1, int seed_offset = 0) {
    if (sweep.empty()) throw ConfigError("regret_sweep: empty sweep list");
    RegretSweepResult out;
    for (const auto& [fp, fn] : sweep) {
        const JudgeChannel channel(fp, fn);  // validates delta > 0
        const RegretRunResult run = run_bandit_regret(thetas, channel, horizon, seeds, master_seed,
                                                      threads, seed_offset);
        RegretSweepCondition cond;
        cond.eps_fp = fp;
        cond.eps_fn = fn;
        cond.delta = channel.delta();
        cond.mean_final = run.mean_final;
        cond.ci = bootstrap_mean_ci(run.final_per_seed);
        cond.final_per_seed = run.final_per_seed;
        out.conditions.push_back(std::move(cond));
    }
    return out;
}

}  // namespace beliefroute
