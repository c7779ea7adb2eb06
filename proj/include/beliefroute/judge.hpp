#pragma once

#include <optional>
#include <span>
#include <string>

#include "beliefroute/errors.hpp"
#include "beliefroute/rng.hpp"

namespace beliefroute {

/// Binary noise model for the adjudicator: true outcomes are flipped with
/// class-conditional rates eps_fn (success reported as failure) and eps_fp
/// (failure reported as success). The discrimination margin
/// delta = 1 - eps_fp - eps_fn must be positive, otherwise verdicts carry
/// no information and the channel is rejected outright.
class JudgeChannel {
public:
    JudgeChannel(double eps_fp, double eps_fn) : eps_fp_(eps_fp), eps_fn_(eps_fn) {
        if (!(eps_fp >= 0.0 && eps_fp < 1.0) || !(eps_fn >= 0.0 && eps_fn < 1.0)) {
            throw ConfigError("judge channel rates must lie in [0, 1)");
        }
        if (delta() <= 0.0) {
            throw ConfigError("judge channel is uninformative: delta = 1 - eps_fp - eps_fn <= 0");
        }
    }

    static JudgeChannel perfect() { return JudgeChannel(0.0, 0.0); }

    [[nodiscard]] double eps_fp() const { return eps_fp_; }
    [[nodiscard]] double eps_fn() const { return eps_fn_; }
    [[nodiscard]] double delta() const { return 1.0 - eps_fp_ - eps_fn_; }

private:
    double eps_fp_;
    double eps_fn_;
};

enum class VerdictSource { programmatic, channel, ensemble };

inline const char* to_string(VerdictSource s) {
    switch (s) {
        case VerdictSource::programmatic: return "programmatic";
        case VerdictSource::channel: return "channel";
        case VerdictSource::ensemble: return "ensemble";
    }
    return "?";
}

/// Judge outcome for one candidate. At least one of prog_score /
/// judge_score is always present.
struct Verdict {
    bool success = false;
    std::string rationale;
    std::optional<double> prog_score;
    std::optional<double> judge_score;
    VerdictSource source = VerdictSource::channel;
};

// Judge scores reported on the channel path: the simulated adjudicator maps
// its binary verdict onto the 0-100 scale. Scores only rank candidates;
// belief updates stay strictly binary.
inline constexpr double kJudgeScoreSuccess = 100.0;
inline constexpr double kJudgeScoreFailure = 0.0;

/// Produce a verdict for one candidate.
///
/// A programmatic score at or above the threshold short-circuits to SUCCESS
/// without consuming any randomness. Otherwise the true outcome is passed
/// through the noise channel.
inline Verdict judge(bool true_outcome, std::optional<double> prog_score,
                     const JudgeChannel& channel, double threshold, RngStream& rng) {
    if (!(threshold >= 0.0 && threshold <= 100.0)) {
        throw ConfigError("judge threshold must lie in [0, 100]");
    }
    Verdict v;
    v.prog_score = prog_score;
    if (prog_score && *prog_score >= threshold) {
        v.success = true;
        v.rationale = "programmatic pass";
        v.source = VerdictSource::programmatic;
        return v;
    }
    const double u = rng.uniform01();
    v.success = true_outcome ? !(u < channel.eps_fn()) : (u < channel.eps_fp());
    v.rationale = v.success ? "judge success" : "judge failure";
    v.judge_score = v.success ? kJudgeScoreSuccess : kJudgeScoreFailure;
    v.source = VerdictSource::channel;
    return v;
}

/// Success probability seen through the channel: delta * theta + eps_fp.
inline double observed_success_prob(double theta, const JudgeChannel& channel) {
    return channel.delta() * theta + channel.eps_fp();
}

/// Majority vote over exactly three independent verdicts on one candidate.
/// Rationales are concatenated; scores are averaged over those present.
inline Verdict ensemble_judge(std::span<const Verdict> verdicts) {
    if (verdicts.size() != 3) {
        throw ContractViolation("ensemble_judge requires exactly 3 verdicts");
    }
    Verdict out;
    int votes = 0;
    double prog_sum = 0.0, judge_sum = 0.0;
    int prog_n = 0, judge_n = 0;
    for (const Verdict& v : verdicts) {
        votes += v.success ? 1 : 0;
        if (!out.rationale.empty()) out.rationale += " | ";
        out.rationale += v.rationale;
        if (v.prog_score) {
            prog_sum += *v.prog_score;
            ++prog_n;
        }
        if (v.judge_score) {
            judge_sum += *v.judge_score;
            ++judge_n;
        }
    }
    out.success = votes >= 2;
    if (prog_n > 0) out.prog_score = prog_sum / prog_n;
    if (judge_n > 0) out.judge_score = judge_sum / judge_n;
    out.source = VerdictSource::ensemble;
    return out;
}

/// Combined candidate score: programmatic evidence dominates when present.
inline double combine_scores(std::optional<double> prog_score, std::optional<double> judge_score) {
    if (prog_score) return *prog_score;
    if (judge_score) return *judge_score;
    throw ContractViolation("combine_scores requires at least one score");
}

}  // namespace beliefroute
