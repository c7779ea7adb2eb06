#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "beliefroute/beliefs.hpp"
#include "beliefroute/errors.hpp"
#include "beliefroute/judge.hpp"

namespace beliefroute {

/// One entry of the controller's candidate ledger.
struct Candidate {
    std::string payload;
    std::optional<double> prog_score;
    std::optional<double> judge_score;
    AgentId producer;
    int round = 0;
    /// Entailment-style evidence flag; candidates with evidence_ok == false
    /// are excluded before selection.
    bool evidence_ok = true;
};

inline constexpr double kDefaultTrustFloor = 0.2;

namespace detail {

inline double trust_of(const std::map<AgentId, double>& trust, const AgentId& id) {
    auto it = trust.find(id);
    if (it == trust.end()) {
        throw ContractViolation("aggregation: no trust weight for producer '" + id + "'");
    }
    return it->second;
}

}  // namespace detail

/// Selection with evidence: return the best-scored candidate, never an
/// average. Candidates from producers whose trust falls below `trust_floor`
/// are dropped first, unless that would empty the set. Ties on combined
/// score go to the producer with larger trust, then to the earlier round.
inline Candidate aggregate_select(std::span<const Candidate> candidates,
                                  const std::map<AgentId, double>& trust,
                                  double trust_floor = kDefaultTrustFloor) {
    if (candidates.empty()) {
        throw ContractViolation("aggregate_select: empty candidate set");
    }

    std::vector<const Candidate*> pool;
    pool.reserve(candidates.size());
    for (const Candidate& c : candidates) {
        if (c.evidence_ok) pool.push_back(&c);
    }
    if (pool.empty()) {
        for (const Candidate& c : candidates) pool.push_back(&c);
    }

    std::vector<const Candidate*> trusted;
    trusted.reserve(pool.size());
    for (const Candidate* c : pool) {
        if (detail::trust_of(trust, c->producer) >= trust_floor) trusted.push_back(c);
    }
    if (!trusted.empty()) pool = std::move(trusted);

    const Candidate* best = nullptr;
    double best_score = 0.0, best_trust = 0.0;
    for (const Candidate* c : pool) {
        const double score = combine_scores(c->prog_score, c->judge_score);
        const double t = detail::trust_of(trust, c->producer);
        if (best == nullptr || score > best_score || (score == best_score && t > best_trust) ||
            (score == best_score && t == best_trust && c->round < best->round)) {
            best = c;
            best_score = score;
            best_trust = t;
        }
    }
    return *best;
}

/// Structured output: a flat map of atomic fields (numbers, date strings,
/// tokens) plus its producer.
struct StructuredCandidate {
    std::map<std::string, nlohmann::json> fields;
    AgentId producer;
};

/// Competence-weighted field fusion. Per field, each distinct value collects
/// the summed trust of its proposers and the heaviest value wins; ties go to
/// the value backed by the single highest-trust proposer, then to the
/// lexicographically smaller value. The result carries the synthetic
/// producer id "fused".
inline StructuredCandidate fuse_structured(std::span<const StructuredCandidate> candidates,
                                           const std::map<AgentId, double>& trust) {
    if (candidates.empty()) {
        throw ContractViolation("fuse_structured: empty candidate set");
    }
    for (const StructuredCandidate& c : candidates) {
        if (c.fields.size() != candidates.front().fields.size()) {
            throw ContractViolation("fuse_structured: schema mismatch");
        }
        for (const auto& [name, value] : c.fields) {
            if (candidates.front().fields.find(name) == candidates.front().fields.end()) {
                throw ContractViolation("fuse_structured: schema mismatch on field '" + name + "'");
            }
        }
    }

    StructuredCandidate fused;
    fused.producer = "fused";
    for (const auto& [name, first_value] : candidates.front().fields) {
        struct Votes {
            nlohmann::json value;
            double weight = 0.0;
            double top_proposer = 0.0;
        };
        // keyed by serialized value; map order doubles as the lexicographic tie-break
        std::map<std::string, Votes> tally;
        for (const StructuredCandidate& c : candidates) {
            const nlohmann::json& value = c.fields.at(name);
            const double t = detail::trust_of(trust, c.producer);
            Votes& v = tally[value.dump()];
            v.value = value;
            v.weight += t;
            v.top_proposer = std::max(v.top_proposer, t);
        }
        const Votes* winner = nullptr;
        for (const auto& [key, v] : tally) {
            if (winner == nullptr || v.weight > winner->weight ||
                (v.weight == winner->weight && v.top_proposer > winner->top_proposer)) {
                winner = &v;
            }
        }
        fused.fields[name] = winner->value;
    }
    return fused;
}

}  // namespace beliefroute
