#pragma once

#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "beliefroute/errors.hpp"

namespace beliefroute {

/// Receives one structured event per controller step. Implementations must
/// tolerate being called from a single episode at a time only.
class EventSink {
public:
    virtual ~EventSink() = default;
    virtual void emit(const nlohmann::json& event) = 0;
};

/// Writes events as JSONL.
class JsonlWriter : public EventSink {
public:
    explicit JsonlWriter(std::ostream& out) : out_(out) {}
    void emit(const nlohmann::json& event) override { out_ << event.dump() << '\n'; }

private:
    std::ostream& out_;
};

/// Serializes events straight into a string; used to fan events in from
/// worker threads and flush them in a deterministic order.
class JsonlStringBuffer : public EventSink {
public:
    void emit(const nlohmann::json& event) override {
        buf_ += event.dump();
        buf_ += '\n';
    }
    [[nodiscard]] const std::string& str() const { return buf_; }

private:
    std::string buf_;
};

/// Collects events in memory (tests, deterministic fan-in across threads).
class EventBuffer : public EventSink {
public:
    void emit(const nlohmann::json& event) override { events_.push_back(event); }
    [[nodiscard]] const std::vector<nlohmann::json>& events() const { return events_; }
    void write_jsonl(std::ostream& out) const {
        for (const auto& e : events_) out << e.dump() << '\n';
    }

private:
    std::vector<nlohmann::json> events_;
};

struct ReplayMismatch {
    std::size_t line = 0;
    int episode = 0;
    int round = 0;
    std::string field;
    std::string expected;
    std::string actual;
};

struct ReplayReport {
    int episodes = 0;
    int rounds = 0;
    std::vector<ReplayMismatch> mismatches;
    std::string last_status = "failure";
    double last_cost = 0.0;
    int last_rounds = 0;

    [[nodiscard]] bool ok() const { return mismatches.empty(); }
};

namespace detail {

struct ReplayEpisode {
    int index = 0;
    int cooldown_r = 0;
    std::string forced_release = "min_cooldown";
    std::map<std::string, double> alpha, beta;
    std::map<std::string, int> cool;
    double spent = 0.0;
    int rounds = 0;
    bool any_success = false;
    bool any_candidate = false;
    bool open = false;
};

inline std::string num_str(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace detail

/// Re-derive belief trajectories, spend, and cooldown evolution from a
/// controller event log and check them against the logged values exactly.
/// Every divergence is reported with its episode, round, and field.
inline ReplayReport replay_log(std::istream& in) {
    using nlohmann::json;
    ReplayReport report;
    detail::ReplayEpisode ep;
    std::string line;
    std::size_t lineno = 0;

    auto mismatch = [&](int round, const std::string& field, const std::string& expected,
                        const std::string& actual) {
        report.mismatches.push_back({lineno, ep.index, round, field, expected, actual});
    };

    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json e;
        try {
            e = json::parse(line);
        } catch (const json::parse_error& err) {
            throw ConfigError("replay: corrupt log line " + std::to_string(lineno) + ": " +
                              err.what());
        }
        const std::string type = e.value("type", "");
        if (type == "episode_start") {
            ep = detail::ReplayEpisode{};
            ep.open = true;
            ep.index = e.value("episode", 0);
            ep.cooldown_r = e.value("cooldown_r", 0);
            ep.forced_release = e.value("forced_release", "min_cooldown");
            for (const auto& [id, prior] : e.at("priors").items()) {
                ep.alpha[id] = prior.at("alpha").get<double>();
                ep.beta[id] = prior.at("beta").get<double>();
                ep.cool[id] = 0;
            }
            ++report.episodes;
        } else if (type == "round") {
            if (!ep.open) throw ConfigError("replay: round event before episode_start at line " +
                                            std::to_string(lineno));
            const int round = e.value("round", 0);
            const std::string agent = e.at("agent").get<std::string>();
            if (ep.alpha.find(agent) == ep.alpha.end()) {
                mismatch(round, "agent", "agent present in priors", agent);
                continue;
            }
            if (e.value("forced_exploration", false)) {
                // one cooldown was cleared before any draw was taken
                auto best = ep.cool.end();
                for (auto it = ep.cool.begin(); it != ep.cool.end(); ++it) {
                    if (best == ep.cool.end()) {
                        best = it;
                        continue;
                    }
                    const bool better = ep.forced_release == "max_cooldown"
                                            ? it->second > best->second
                                            : it->second < best->second;
                    if (better) best = it;
                }
                if (best != ep.cool.end()) best->second = 0;
            }
            const std::string outcome = e.at("verdict").at("outcome").get<std::string>();
            const int y = outcome == "SUCCESS" ? 1 : 0;
            if (e.at("y").get<int>() != y) {
                mismatch(round, "y", std::to_string(y), std::to_string(e.at("y").get<int>()));
            }
            ep.alpha[agent] += y;
            ep.beta[agent] += 1 - y;
            if (e.at("alpha_after").get<double>() != ep.alpha[agent]) {
                mismatch(round, "alpha_after", detail::num_str(ep.alpha[agent]),
                         detail::num_str(e.at("alpha_after").get<double>()));
            }
            if (e.at("beta_after").get<double>() != ep.beta[agent]) {
                mismatch(round, "beta_after", detail::num_str(ep.beta[agent]),
                         detail::num_str(e.at("beta_after").get<double>()));
            }
            ep.spent += e.at("usage").get<double>();
            if (e.at("spent").get<double>() != ep.spent) {
                mismatch(round, "spent", detail::num_str(ep.spent),
                         detail::num_str(e.at("spent").get<double>()));
            }
            if (y == 0) {
                for (auto& [id, c] : ep.cool) {
                    if (c > 0) --c;
                }
                ep.cool[agent] = ep.cooldown_r;
            }
            for (const auto& [id, c] : e.at("cooldowns").items()) {
                auto it = ep.cool.find(id);
                const int expected = it == ep.cool.end() ? -1 : it->second;
                if (c.get<int>() != expected) {
                    mismatch(round, "cooldowns." + id, std::to_string(expected),
                             std::to_string(c.get<int>()));
                }
            }
            ep.any_success = ep.any_success || y == 1;
            const std::string rationale = e.at("verdict").value("rationale", "");
            ep.any_candidate = ep.any_candidate || rationale != "agent fault";
            ep.rounds = round;
            ++report.rounds;
        } else if (type == "budget_break") {
            ep.spent += e.at("usage").get<double>();
            if (e.at("spent").get<double>() != ep.spent) {
                mismatch(e.value("round", 0), "spent", detail::num_str(ep.spent),
                         detail::num_str(e.at("spent").get<double>()));
            }
        } else if (type == "episode_end") {
            const std::string status = e.at("status").get<std::string>();
            const std::string expected_status =
                ep.any_success ? "success" : (ep.any_candidate ? "best_effort" : "failure");
            if (status != expected_status) {
                mismatch(ep.rounds, "status", expected_status, status);
            }
            if (e.at("cost_spent").get<double>() != ep.spent) {
                mismatch(ep.rounds, "cost_spent", detail::num_str(ep.spent),
                         detail::num_str(e.at("cost_spent").get<double>()));
            }
            report.last_status = status;
            report.last_cost = ep.spent;
            report.last_rounds = ep.rounds;
            ep.open = false;
        } else {
            throw ConfigError("replay: unknown event type '" + type + "' at line " +
                              std::to_string(lineno));
        }
    }
    return report;
}

}  // namespace beliefroute
