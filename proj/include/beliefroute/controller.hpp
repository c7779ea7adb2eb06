#pragma once

#include <array>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "beliefroute/aggregation.hpp"
#include "beliefroute/beliefs.hpp"
#include "beliefroute/delegation.hpp"
#include "beliefroute/errors.hpp"
#include "beliefroute/event_log.hpp"
#include "beliefroute/judge.hpp"
#include "beliefroute/memory.hpp"
#include "beliefroute/rng.hpp"

namespace beliefroute {

/// The unit of routing: a query, its embedding, and where we are in the
/// refinement recursion. `time` is logical task-index time used for memory
/// recency.
struct TaskEnvelope {
    std::string query;
    std::vector<double> embedding;
    int depth = 1;
    int refinement_count = 0;
    double time = 0.0;
};

/// What invoking an agent yields. `true_success` is ground truth visible to
/// the judge only, never to the routing policy.
struct AgentCall {
    std::string payload;
    std::optional<double> prog_score;
    bool true_success = false;
    double usage = 1.0;
};

struct AgentEndpoint {
    AgentId id;
    std::function<AgentCall(const TaskEnvelope&, RngStream&)> invoke;
};

using Roster = std::vector<AgentEndpoint>;

struct ControllerConfig {
    int max_depth = 8;
    double budget = 64.0;
    int cooldown = 1;
    int plateau_window = 4;
    PriorConfig prior;
    double judge_threshold = 85.0;
    JudgeChannel channel = JudgeChannel::perfect();
    bool ensemble = false;
    double trust_floor = kDefaultTrustFloor;
    ForcedRelease forced_release = ForcedRelease::min_cooldown;

    void validate() const {
        if (max_depth < 1) throw ConfigError("controller.max_depth must be >= 1");
        if (budget < 0.0) throw ConfigError("controller.budget must be >= 0");
        if (cooldown < 0) throw ConfigError("controller.cooldown must be >= 0");
        if (plateau_window < 1) throw ConfigError("controller.plateau_window must be >= 1");
        if (!(judge_threshold >= 0.0 && judge_threshold <= 100.0)) {
            throw ConfigError("controller.judge_threshold must lie in [0, 100]");
        }
    }
};

enum class EpisodeStatus { success, best_effort, failure };

inline const char* to_string(EpisodeStatus s) {
    switch (s) {
        case EpisodeStatus::success: return "success";
        case EpisodeStatus::best_effort: return "best_effort";
        case EpisodeStatus::failure: return "failure";
    }
    return "?";
}

struct RoundRecord {
    int round = 0;
    AgentId agent;
    Verdict verdict;
};

struct EpisodeResult {
    EpisodeStatus status = EpisodeStatus::failure;
    std::optional<std::string> answer;
    AgentId answer_producer;
    std::optional<double> answer_score;
    int rounds_used = 0;
    double cost_spent = 0.0;
    std::vector<RoundRecord> selections;
    BeliefTable final_beliefs;
};

/// Query refinement step. The scripted default appends the judge's critique
/// to the query and bumps the refinement counter; the embedding is kept.
using RefineHook =
    std::function<TaskEnvelope(const TaskEnvelope&, const Candidate&, const std::string&)>;

inline TaskEnvelope refine(const TaskEnvelope& task, const Candidate&,
                           const std::string& rationale) {
    TaskEnvelope next = task;
    next.refinement_count += 1;
    next.query += "\n[critique] " + rationale;
    return next;
}

/// Plateau: true once at least k+1 candidates exist and the best combined
/// score among the last k fails to beat the best achieved before them.
inline bool plateau(std::span<const Candidate> candidates, int k) {
    if (k < 1) throw ContractViolation("plateau: window must be >= 1");
    const int n = static_cast<int>(candidates.size());
    if (n < k + 1) return false;
    double best_before = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n - k; ++i) {
        best_before = std::max(best_before,
                               combine_scores(candidates[i].prog_score, candidates[i].judge_score));
    }
    double last_max = -std::numeric_limits<double>::infinity();
    for (int i = n - k; i < n; ++i) {
        last_max = std::max(last_max,
                            combine_scores(candidates[i].prog_score, candidates[i].judge_score));
    }
    return last_max <= best_before;
}

/// Pluggable pieces of the episode loop. Leave a hook empty for the default
/// behaviour (Thompson selection, Beta sampling, scripted refiner).
struct ControllerHooks {
    std::function<SelectionOutcome(BeliefTable&, RngStream&)> select;
    RefineHook refine_hook;
    ThetaSampler sampler;
};

namespace detail {

inline nlohmann::json sampled_values_json(const std::map<AgentId, double>& values) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [id, v] : values) {
        if (std::isinf(v) && v < 0) {
            j[id] = nullptr;  // masked agent
        } else {
            j[id] = v;
        }
    }
    return j;
}

inline nlohmann::json verdict_json(const Verdict& v) {
    nlohmann::json j{{"outcome", v.success ? "SUCCESS" : "FAILURE"},
                     {"rationale", v.rationale},
                     {"source", to_string(v.source)}};
    j["prog_score"] = v.prog_score ? nlohmann::json(*v.prog_score) : nlohmann::json(nullptr);
    j["judge_score"] = v.judge_score ? nlohmann::json(*v.judge_score) : nlohmann::json(nullptr);
    return j;
}

inline nlohmann::json cooldowns_json(const BeliefTable& beliefs) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [id, b] : beliefs) j[id] = b.cooldown;
    return j;
}

inline std::map<AgentId, double> trust_weights(const BeliefTable& beliefs) {
    std::map<AgentId, double> trust;
    for (const auto& [id, b] : beliefs) trust[id] = posterior_mean(b);
    return trust;
}

}  // namespace detail

/// One full routing episode: seed priors from memory, then loop
/// select -> invoke -> judge -> update -> remember -> (return | refine)
/// until success, depth, budget, or plateau stops it.
///
/// A faulting agent counts as a FAILURE verdict; its zero-score candidate is
/// kept out of the ledger and no usage is charged. The final answer always
/// goes through aggregate_select, never straight from the last agent.
inline EpisodeResult run_episode(const TaskEnvelope& task, const Roster& roster,
                                 MemoryStore& store, const ControllerConfig& cfg, RngStream& rng,
                                 EventSink* events = nullptr, const ControllerHooks& hooks = {},
                                 int episode_index = 0) {
    cfg.validate();
    if (roster.empty()) throw ConfigError("run_episode: empty roster");
    std::vector<AgentId> ids;
    std::map<AgentId, const AgentEndpoint*> endpoints;
    for (const AgentEndpoint& ep : roster) {
        if (!endpoints.emplace(ep.id, &ep).second) {
            throw ConfigError("run_episode: duplicate agent id '" + ep.id + "'");
        }
        ids.push_back(ep.id);
    }

    const std::vector<MemoryRecord> snapshot = store.snapshot();
    BeliefTable beliefs = init_priors(task.embedding, snapshot, task.time, cfg.prior, ids);

    RngStream select_rng = rng.substream("select");
    RngStream agent_rng = rng.substream("agent");
    std::array<RngStream, 3> judge_rng{rng.substream("judge0"), rng.substream("judge1"),
                                       rng.substream("judge2")};

    if (events != nullptr) {
        nlohmann::json priors = nlohmann::json::object();
        for (const auto& [id, b] : beliefs) priors[id] = {{"alpha", b.alpha}, {"beta", b.beta}};
        events->emit({{"type", "episode_start"},
                      {"episode", episode_index},
                      {"task_time", task.time},
                      {"priors", priors},
                      {"cooldown_r", cfg.cooldown},
                      {"budget", cfg.budget},
                      {"max_depth", cfg.max_depth},
                      {"plateau_window", cfg.plateau_window},
                      {"forced_release", cfg.forced_release == ForcedRelease::min_cooldown
                                             ? "min_cooldown"
                                             : "max_cooldown"}});
    }

    EpisodeResult result;
    std::vector<Candidate> ledger;
    double spent = 0.0;
    double best_score = -std::numeric_limits<double>::infinity();
    TaskEnvelope current = task;

    auto emit_end = [&]() {
        if (events != nullptr) {
            events->emit({{"type", "episode_end"},
                          {"status", to_string(result.status)},
                          {"rounds_used", result.rounds_used},
                          {"cost_spent", result.cost_spent},
                          {"answer_producer", result.answer_producer.empty()
                                                  ? nlohmann::json(nullptr)
                                                  : nlohmann::json(result.answer_producer)}});
        }
    };
    auto finish_from_ledger = [&]() {
        result.cost_spent = spent;
        result.final_beliefs = beliefs;
        if (!ledger.empty()) {
            const Candidate win =
                aggregate_select(ledger, detail::trust_weights(beliefs), cfg.trust_floor);
            result.answer = win.payload;
            result.answer_producer = win.producer;
            result.answer_score = combine_scores(win.prog_score, win.judge_score);
            if (result.status != EpisodeStatus::success) result.status = EpisodeStatus::best_effort;
        } else {
            result.status = EpisodeStatus::failure;
        }
        emit_end();
        return result;
    };

    for (int d = 1; d <= cfg.max_depth; ++d) {
        if (spent >= cfg.budget) break;
        current.depth = d;

        SelectionOutcome sel =
            hooks.select
                ? hooks.select(beliefs, select_rng)
                : select_agent(beliefs, select_rng, cfg.forced_release,
                               hooks.sampler ? hooks.sampler : ThetaSampler(default_theta_sampler));
        const AgentId chosen = sel.chosen;

        AgentCall call;
        bool fault = false;
        try {
            call = endpoints.at(chosen)->invoke(current, agent_rng);
        } catch (const std::exception&) {
            fault = true;
        }

        if (!fault) {
            spent += call.usage;
            if (spent > cfg.budget) {
                // charged but aborted; the round never completes
                if (events != nullptr) {
                    events->emit({{"type", "budget_break"},
                                  {"round", d},
                                  {"agent", chosen},
                                  {"usage", call.usage},
                                  {"spent", spent}});
                }
                break;
            }
        }

        Verdict verdict;
        if (fault) {
            verdict.success = false;
            verdict.rationale = "agent fault";
            verdict.judge_score = 0.0;
            verdict.source = VerdictSource::channel;
        } else if (cfg.ensemble) {
            std::array<Verdict, 3> votes{
                judge(call.true_success, call.prog_score, cfg.channel, cfg.judge_threshold,
                      judge_rng[0]),
                judge(call.true_success, call.prog_score, cfg.channel, cfg.judge_threshold,
                      judge_rng[1]),
                judge(call.true_success, call.prog_score, cfg.channel, cfg.judge_threshold,
                      judge_rng[2])};
            verdict = ensemble_judge(votes);
        } else {
            verdict = judge(call.true_success, call.prog_score, cfg.channel, cfg.judge_threshold,
                            judge_rng[0]);
        }

        const int y = verdict.success ? 1 : 0;
        beliefs[chosen] = update(beliefs[chosen], y, d);
        store.append(MemoryRecord{task.embedding, chosen, y, verdict.rationale, task.time});

        Candidate cand;
        if (!fault) {
            cand = Candidate{call.payload, call.prog_score, verdict.judge_score, chosen, d, true};
            ledger.push_back(cand);
            const double cand_score = combine_scores(cand.prog_score, cand.judge_score);
            if (cand_score > best_score) best_score = cand_score;
        }

        result.selections.push_back({d, chosen, verdict});
        result.rounds_used = d;

        auto emit_round = [&]() {
            if (events == nullptr) return;
            events->emit({{"type", "round"},
                          {"round", d},
                          {"agent", chosen},
                          {"sampled_values", detail::sampled_values_json(sel.sampled_values)},
                          {"forced_exploration", sel.forced_exploration},
                          {"verdict", detail::verdict_json(verdict)},
                          {"y", y},
                          {"alpha_after", beliefs[chosen].alpha},
                          {"beta_after", beliefs[chosen].beta},
                          {"usage", fault ? 0.0 : call.usage},
                          {"spent", spent},
                          {"cooldowns", detail::cooldowns_json(beliefs)}});
        };

        if (y == 1) {
            emit_round();
            result.status = EpisodeStatus::success;
            return finish_from_ledger();
        }

        apply_cooldown(beliefs, chosen, cfg.cooldown);
        emit_round();

        current = hooks.refine_hook ? hooks.refine_hook(current, cand, verdict.rationale)
                                    : refine(current, cand, verdict.rationale);

        if (plateau(ledger, cfg.plateau_window)) break;
    }

    return finish_from_ledger();
}

}  // namespace beliefroute
