#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <string>

#include <json.hpp>

#include "beliefroute/errors.hpp"
#include "beliefroute/rng.hpp"

namespace beliefroute {

using AgentId = std::string;

/// Beta posterior over one agent's success probability, plus the cooldown
/// counter used by the selection policy. Plain data; copy freely.
///
/// alpha/beta are doubles because memory-seeded priors contribute
/// fractional pseudo-counts.
struct BeliefState {
    double alpha = 1.0;
    double beta = 1.0;
    int cooldown = 0;
    std::int64_t updated_at = 0;
};

using BeliefTable = std::map<AgentId, BeliefState>;

inline void check_belief_params(const BeliefState& b) {
    if (!std::isfinite(b.alpha) || !std::isfinite(b.beta) || b.alpha <= 0.0 || b.beta <= 0.0) {
        throw std::invalid_argument("BeliefState requires finite alpha > 0 and beta > 0");
    }
}

/// One posterior draw theta ~ Beta(alpha, beta), via two Gamma variates.
inline double sample(const BeliefState& belief, RngStream& rng) {
    check_belief_params(belief);
    const double x = rng.gamma(belief.alpha);
    const double y = rng.gamma(belief.beta);
    const double s = x + y;
    if (s <= 0.0) {
        // both gammas underflowed (pathologically small shapes)
        return 0.5;
    }
    return x / s;
}

/// Conjugate update: alpha += y, beta += (1 - y). Cooldown is untouched.
inline BeliefState update(const BeliefState& belief, int outcome, std::int64_t at) {
    BeliefState next = belief;
    next.alpha += outcome;
    next.beta += 1 - outcome;
    next.updated_at = at;
    return next;
}

inline double posterior_mean(const BeliefState& belief) {
    check_belief_params(belief);
    return belief.alpha / (belief.alpha + belief.beta);
}

/// Persistence: a JSON object mapping agent id -> {alpha, beta, updated_at}.
/// Cooldown is intentionally not stored; it is per-episode state.
inline void save_beliefs(const BeliefTable& table, std::ostream& out) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [id, b] : table) {
        j[id] = {{"alpha", b.alpha}, {"beta", b.beta}, {"updated_at", b.updated_at}};
    }
    out << j.dump(2) << '\n';
}

inline BeliefTable load_beliefs(std::istream& in) {
    nlohmann::json j;
    in >> j;
    if (!j.is_object()) {
        throw ConfigError("belief file must be a JSON object keyed by agent id");
    }
    BeliefTable table;
    for (const auto& [id, v] : j.items()) {
        BeliefState b;
        b.alpha = v.at("alpha").get<double>();
        b.beta = v.at("beta").get<double>();
        b.updated_at = v.at("updated_at").get<std::int64_t>();
        check_belief_params(b);
        table[id] = b;
    }
    return table;
}

}  // namespace beliefroute
