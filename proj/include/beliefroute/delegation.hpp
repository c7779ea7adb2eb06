#pragma once

#include <functional>
#include <limits>
#include <map>

#include "beliefroute/beliefs.hpp"
#include "beliefroute/errors.hpp"
#include "beliefroute/rng.hpp"

namespace beliefroute {

/// Which cooldown to clear when every agent is masked. min_cooldown releases
/// the agent closest to natural eligibility (the least recently used one).
enum class ForcedRelease { min_cooldown, max_cooldown };

struct SelectionOutcome {
    AgentId chosen;
    std::map<AgentId, double> sampled_values;  // -inf for masked agents
    bool forced_exploration = false;
};

/// Posterior draw used during selection. Injectable so tests and scripted
/// traces can pin the sampled values.
using ThetaSampler = std::function<double(const AgentId&, const BeliefState&, RngStream&)>;

inline double default_theta_sampler(const AgentId&, const BeliefState& b, RngStream& rng) {
    return sample(b, rng);
}

namespace detail {

/// Clear one cooldown so selection can proceed; returns the released agent.
inline AgentId force_release(BeliefTable& beliefs, ForcedRelease mode) {
    auto best = beliefs.end();
    for (auto it = beliefs.begin(); it != beliefs.end(); ++it) {
        if (best == beliefs.end()) {
            best = it;
            continue;
        }
        const bool better = mode == ForcedRelease::min_cooldown
                                ? it->second.cooldown < best->second.cooldown
                                : it->second.cooldown > best->second.cooldown;
        if (better) best = it;  // ties keep the smaller id (map order)
    }
    best->second.cooldown = 0;
    return best->first;
}

}  // namespace detail

/// Thompson-sampling selection over all agents with cooldown 0.
///
/// One Beta draw is taken per eligible agent; the argmax wins, ties broken
/// first by larger posterior mean, then by smaller agent id. If every agent
/// is masked, no draw is taken: one cooldown is cleared (per `release`) and
/// selection is retried within the same call with forced_exploration set.
inline SelectionOutcome select_agent(BeliefTable& beliefs, RngStream& rng,
                                     ForcedRelease release = ForcedRelease::min_cooldown,
                                     const ThetaSampler& sampler = default_theta_sampler) {
    if (beliefs.empty()) {
        throw ConfigError("select_agent: empty roster");
    }
    SelectionOutcome out;
    bool any_eligible = false;
    for (const auto& [id, b] : beliefs) {
        if (b.cooldown == 0) {
            any_eligible = true;
            break;
        }
    }
    if (!any_eligible) {
        detail::force_release(beliefs, release);
        out.forced_exploration = true;
    }

    constexpr double neg_inf = -std::numeric_limits<double>::infinity();
    const BeliefState* chosen_state = nullptr;
    for (const auto& [id, b] : beliefs) {
        if (b.cooldown > 0) {
            out.sampled_values[id] = neg_inf;
            continue;
        }
        const double draw = sampler(id, b, rng);
        out.sampled_values[id] = draw;
        if (chosen_state == nullptr) {
            out.chosen = id;
            chosen_state = &b;
            continue;
        }
        const double incumbent = out.sampled_values[out.chosen];
        if (draw > incumbent ||
            (draw == incumbent && posterior_mean(b) > posterior_mean(*chosen_state))) {
            out.chosen = id;
            chosen_state = &b;
        }
        // equal draw and equal mean: keep the earlier (smaller) id
    }
    return out;
}

/// Cooldown bookkeeping after a round: decrement every counter, then set the
/// chosen agent's counter to r. The chosen agent is therefore never
/// decremented in the round it was selected.
inline void apply_cooldown(BeliefTable& beliefs, const AgentId& chosen, int r) {
    if (beliefs.find(chosen) == beliefs.end()) {
        throw ContractViolation("apply_cooldown: chosen agent not in roster");
    }
    for (auto& [id, b] : beliefs) {
        if (b.cooldown > 0) --b.cooldown;
    }
    beliefs[chosen].cooldown = r;
}

}  // namespace beliefroute
