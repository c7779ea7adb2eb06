#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "beliefroute/controller.hpp"
#include "beliefroute/parallel.hpp"
#include "beliefroute/delegation.hpp"
#include "beliefroute/errors.hpp"
#include "beliefroute/judge.hpp"
#include "beliefroute/rng.hpp"

namespace beliefroute {

/// Piecewise-constant competence: theta applies from task index `from`
/// until the next point.
struct SchedulePoint {
    long from = 0;
    double theta = 0.5;
};

/// A synthetic Bernoulli agent. Success probability follows the schedule,
/// plus an additive boost (clamped to [0,1]) on tasks that require the
/// agent's domain.
struct SimAgentSpec {
    AgentId id;
    std::vector<SchedulePoint> schedule;
    std::string domain_tag;
    double cost_per_call = 1.0;
    double domain_boost = 0.0;

    static SimAgentSpec constant(AgentId id, double theta, std::string domain = {},
                                 double boost = 0.0, double cost = 1.0) {
        return SimAgentSpec{std::move(id), {{0, theta}}, std::move(domain), cost, boost};
    }

    [[nodiscard]] double theta_at(long task_index) const {
        validate();
        double theta = schedule.front().theta;
        for (const SchedulePoint& p : schedule) {
            if (p.from <= task_index) theta = p.theta;
        }
        return theta;
    }

    void validate() const {
        if (schedule.empty() || schedule.front().from != 0) {
            throw ConfigError("agent '" + id + "': schedule must start at task index 0");
        }
        long prev = -1;
        for (const SchedulePoint& p : schedule) {
            if (p.from <= prev) {
                throw ConfigError("agent '" + id + "': schedule indices must increase");
            }
            if (!(p.theta >= 0.0 && p.theta <= 1.0)) {
                throw ConfigError("agent '" + id + "': theta must lie in [0, 1]");
            }
            prev = p.from;
        }
    }
};

struct SimTaskSpec {
    std::vector<double> embedding;
    std::set<std::string> required_domains;
    long index = 0;
};

/// Effective success probability of an agent on a task.
inline double effective_theta(const SimAgentSpec& spec, const SimTaskSpec& task) {
    double theta = spec.theta_at(task.index);
    if (!spec.domain_tag.empty() && task.required_domains.count(spec.domain_tag) > 0) {
        theta = std::clamp(theta + spec.domain_boost, 0.0, 1.0);
    }
    return theta;
}

/// One simulated invocation: Bernoulli success at the effective competence,
/// cost as configured.
inline std::pair<bool, double> simulate_agent_call(const SimAgentSpec& spec,
                                                   const SimTaskSpec& task, RngStream& rng) {
    return {rng.bernoulli(effective_theta(spec, task)), spec.cost_per_call};
}

/// Bind a simulated agent to one concrete task as a controller endpoint.
inline AgentEndpoint make_endpoint(SimAgentSpec spec, SimTaskSpec task) {
    AgentId id = spec.id;
    return AgentEndpoint{
        std::move(id), [spec = std::move(spec), task = std::move(task)](
                           const TaskEnvelope&, RngStream& rng) {
            auto [ok, usage] = simulate_agent_call(spec, task, rng);
            AgentCall call;
            call.payload = spec.id + " answer for task " + std::to_string(task.index);
            call.true_success = ok;
            call.usage = usage;
            return call;
        }};
}

inline Roster make_roster(std::span<const SimAgentSpec> specs, const SimTaskSpec& task) {
    Roster roster;
    roster.reserve(specs.size());
    for (const SimAgentSpec& s : specs) roster.push_back(make_endpoint(s, task));
    return roster;
}

/// Uniform-random selection over all non-cooled agents: the Random
/// Delegation baseline policy. Masking and forced release behave exactly as
/// in Thompson selection; only the choice among eligible agents differs,
/// and no posterior draw is ever taken.
inline SelectionOutcome uniform_select(BeliefTable& beliefs, RngStream& rng,
                                       ForcedRelease release = ForcedRelease::min_cooldown) {
    if (beliefs.empty()) throw ConfigError("uniform_select: empty roster");
    SelectionOutcome out;
    std::vector<const AgentId*> eligible;
    for (const auto& [id, b] : beliefs) {
        if (b.cooldown == 0) eligible.push_back(&id);
    }
    if (eligible.empty()) {
        const AgentId released = detail::force_release(beliefs, release);
        out.forced_exploration = true;
        eligible.push_back(&beliefs.find(released)->first);
    }
    out.chosen = *eligible[rng.uniform_index(eligible.size())];
    return out;
}

/// Identical loop to run_episode with selection made uniformly random.
/// Belief updates are still recorded (and logged) but never consulted.
inline EpisodeResult run_random_baseline(const TaskEnvelope& task, const Roster& roster,
                                         MemoryStore& store, const ControllerConfig& cfg,
                                         RngStream& rng, EventSink* events = nullptr,
                                         int episode_index = 0) {
    ControllerHooks hooks;
    hooks.select = [release = cfg.forced_release](BeliefTable& beliefs, RngStream& r) {
        return uniform_select(beliefs, r, release);
    };
    return run_episode(task, roster, store, cfg, rng, events, hooks, episode_index);
}

/// Exact pull/gap accounting against the true competences. The cumulative
/// regret is always recomputed as sum(gap * pulls), so the decomposition
/// identity holds identically, not just to rounding.
class RegretLedger {
public:
    explicit RegretLedger(std::span<const double> thetas) {
        if (thetas.empty()) throw ConfigError("RegretLedger: no arms");
        const double best = *std::max_element(thetas.begin(), thetas.end());
        gaps_.reserve(thetas.size());
        for (double t : thetas) gaps_.push_back(best - t);
        pulls_.assign(thetas.size(), 0);
    }

    void record_pull(std::size_t arm) {
        pulls_.at(arm) += 1;
        cumulative_ = 0.0;
        for (std::size_t j = 0; j < gaps_.size(); ++j) {
            cumulative_ += gaps_[j] * static_cast<double>(pulls_[j]);
        }
    }

    [[nodiscard]] const std::vector<std::int64_t>& pulls() const { return pulls_; }
    [[nodiscard]] const std::vector<double>& gaps() const { return gaps_; }
    [[nodiscard]] double cumulative_regret() const { return cumulative_; }

private:
    std::vector<double> gaps_;
    std::vector<std::int64_t> pulls_;
    double cumulative_ = 0.0;
};

struct RegretRunResult {
    std::vector<double> mean_cumulative;   // per-round mean over seeds
    std::vector<double> final_per_seed;    // R(T) for each seed
    std::vector<double> optimal_fraction;  // per-seed pull fraction of the best arm, last 10%
    std::vector<std::size_t> most_pulled;  // per-seed argmax of pulls
    double mean_final = 0.0;
};

/// Pure Thompson sampling over `thetas` with verdicts flowing through the
/// channel and regret charged against the true competences. No cooldown, no
/// recursion. Seeds run independently (optionally across threads) and
/// reduce deterministically in seed order.
inline RegretRunResult run_bandit_regret(std::span<const double> thetas,
                                         const JudgeChannel& channel, long horizon, int seeds,
                                         std::uint64_t master_seed, int threads = 1,
                                         int seed_offset = 0) {
    if (horizon < 1) throw ConfigError("run_bandit_regret: horizon must be >= 1");
    if (seeds < 1) throw ConfigError("run_bandit_regret: need at least one seed");
    const std::size_t n = thetas.size();
    const std::size_t best_arm = static_cast<std::size_t>(
        std::max_element(thetas.begin(), thetas.end()) - thetas.begin());

    std::vector<std::vector<double>> curves(seeds);
    RegretRunResult result;
    result.final_per_seed.assign(seeds, 0.0);
    result.optimal_fraction.assign(seeds, 0.0);
    result.most_pulled.assign(seeds, 0);

    auto run_seed = [&](int s) {
        RngStream rng = RngStream(master_seed).substream("regret").substream(
            static_cast<std::uint64_t>(seed_offset + s));
        std::vector<BeliefState> beliefs(n);
        RegretLedger ledger(thetas);
        std::vector<double>& curve = curves[s];
        curve.resize(horizon);
        const long tail_start = horizon - horizon / 10;
        std::int64_t tail_best_pulls = 0;
        for (long t = 0; t < horizon; ++t) {
            std::size_t arm = 0;
            double best_draw = -1.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double draw = sample(beliefs[j], rng);
                if (draw > best_draw ||
                    (draw == best_draw &&
                     posterior_mean(beliefs[j]) > posterior_mean(beliefs[arm]))) {
                    best_draw = draw;
                    arm = j;
                }
            }
            const bool true_outcome = rng.bernoulli(thetas[arm]);
            const double u = rng.uniform01();
            const bool y = true_outcome ? !(u < channel.eps_fn()) : (u < channel.eps_fp());
            beliefs[arm] = update(beliefs[arm], y ? 1 : 0, t);
            ledger.record_pull(arm);
            curve[t] = ledger.cumulative_regret();
            if (t >= tail_start && arm == best_arm) ++tail_best_pulls;
        }
        result.final_per_seed[s] = ledger.cumulative_regret();
        result.optimal_fraction[s] =
            static_cast<double>(tail_best_pulls) / static_cast<double>(horizon - tail_start);
        result.most_pulled[s] = static_cast<std::size_t>(
            std::max_element(ledger.pulls().begin(), ledger.pulls().end()) -
            ledger.pulls().begin());
    };

    parallel_for_index(seeds, threads, run_seed);

    result.mean_cumulative.assign(horizon, 0.0);
    for (int s = 0; s < seeds; ++s) {
        for (long t = 0; t < horizon; ++t) result.mean_cumulative[t] += curves[s][t];
    }
    for (long t = 0; t < horizon; ++t) result.mean_cumulative[t] /= seeds;
    double total = 0.0;
    for (double v : result.final_per_seed) total += v;
    result.mean_final = total / seeds;
    return result;
}

}  // namespace beliefroute
