#pragma once

#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "beliefroute/config.hpp"
#include "beliefroute/experiments.hpp"
#include "beliefroute/parallel.hpp"
#include "beliefroute/stats.hpp"

namespace beliefroute {

/// Everything `run` produces, keyed by output file name. Callers decide
/// where (or whether) to write; tests compare bytes directly.
struct RunArtifacts {
    std::map<std::string, std::string> files;
    std::string report;
};

namespace rundetail {

/// Metric numbers are rounded to 6 significant digits on the way out.
inline nlohmann::json sig6(double v) { return nlohmann::json::parse(format_sig6(v)); }

inline nlohmann::json ci_json(const Interval& ci) {
    return nlohmann::json::array({sig6(ci.lo), sig6(ci.hi)});
}

inline nlohmann::json metric_json(std::span<const double> xs) {
    return {{"mean", sig6(mean(xs))}, {"ci", ci_json(bootstrap_mean_ci(xs))}};
}

class Csv {
public:
    explicit Csv(std::initializer_list<const char*> header) {
        bool first = true;
        for (const char* h : header) {
            if (!first) out_ << ',';
            out_ << h;
            first = false;
        }
        out_ << '\n';
        columns_ = header.size();
    }

    Csv& cell(const std::string& v) {
        if (col_ > 0) out_ << ',';
        out_ << v;
        ++col_;
        return *this;
    }
    Csv& cell(double v) { return cell(format_sig6(v)); }
    Csv& cell(int v) { return cell(std::to_string(v)); }
    Csv& cell(long v) { return cell(std::to_string(v)); }

    void end_row() {
        if (col_ != columns_) throw ContractViolation("csv row width mismatch");
        out_ << '\n';
        col_ = 0;
    }

    [[nodiscard]] std::string str() const { return out_.str(); }

private:
    std::ostringstream out_;
    std::size_t columns_ = 0;
    std::size_t col_ = 0;
};

class Report {
public:
    explicit Report(const ExperimentConfig& cfg) {
        line("experiment", to_string(cfg.experiment));
        line("seeds", std::to_string(cfg.seeds) +
                          (cfg.seed_offset > 0
                               ? " (offset " + std::to_string(cfg.seed_offset) + ")"
                               : ""));
    }

    void line(const std::string& key, const std::string& value) {
        char buf[256];
        std::snprintf(buf, sizeof(buf), "  %-34s %s\n", key.c_str(), value.c_str());
        out_ += buf;
    }
    void line(const std::string& key, double value) { line(key, format_sig6(value)); }
    void line(const std::string& key, double value, const Interval& ci) {
        line(key, format_sig6(value) + "  [" + format_sig6(ci.lo) + ", " + format_sig6(ci.hi) +
                      "]");
    }

    [[nodiscard]] std::string str() const { return out_; }

private:
    std::string out_;
};

inline std::string beliefs_json(const BeliefTable& table) {
    std::ostringstream out;
    save_beliefs(table, out);
    return out.str();
}

inline RunArtifacts run_episode_kind(const ExperimentConfig& cfg) {
    const std::vector<SimTaskSpec> tasks = generate_tasks(cfg.task_stream);
    std::vector<SessionResult> sessions(cfg.seeds);
    std::vector<std::string> logs(cfg.seeds);
    parallel_for_index(cfg.seeds, cfg.threads, [&](int s) {
        JsonlStringBuffer sink;
        const std::uint64_t sid = static_cast<std::uint64_t>(cfg.seed_offset + s);
        sessions[s] = run_session(cfg.roster, cfg.controller, tasks, cfg.master_seed,
                                  Policy::thompson, &sink, sid);
        logs[s] = sink.str();
    });

    Csv csv({"seed", "success_rate", "mean_rounds", "mean_cost"});
    std::vector<double> rate, rounds, cost;
    std::string events;
    for (int s = 0; s < cfg.seeds; ++s) {
        const SessionResult& r = sessions[s];
        csv.cell(cfg.seed_offset + s).cell(r.success_rate).cell(r.mean_rounds).cell(r.mean_cost);
        csv.end_row();
        rate.push_back(r.success_rate);
        rounds.push_back(r.mean_rounds);
        cost.push_back(r.mean_cost);
        events += logs[s];
    }

    nlohmann::json summary{{"experiment", "episode"},
                           {"seeds", cfg.seeds},
                           {"tasks", static_cast<int>(tasks.size())},
                           {"success_rate", metric_json(rate)},
                           {"mean_rounds", metric_json(rounds)},
                           {"mean_cost", metric_json(cost)}};

    Report rep(cfg);
    rep.line("tasks", std::to_string(tasks.size()));
    rep.line("success_rate", mean(rate), bootstrap_mean_ci(rate));
    rep.line("mean_rounds", mean(rounds), bootstrap_mean_ci(rounds));
    rep.line("mean_cost", mean(cost), bootstrap_mean_ci(cost));

    RunArtifacts art;
    art.files["events.jsonl"] = events;
    art.files["metrics.csv"] = csv.str();
    art.files["summary.json"] = summary.dump(2) + "\n";
    art.files["beliefs.json"] = beliefs_json(sessions.front().last_beliefs);
    art.report = rep.str();
    return art;
}

inline RunArtifacts run_efficiency_kind(const ExperimentConfig& cfg) {
    const std::vector<SimTaskSpec> tasks = generate_tasks(cfg.task_stream);
    std::vector<EfficiencyResult> runs(cfg.seeds);
    std::vector<std::string> ts_logs(cfg.seeds), rand_logs(cfg.seeds);
    parallel_for_index(cfg.seeds, cfg.threads, [&](int s) {
        JsonlStringBuffer ts_sink, rand_sink;
        const std::uint64_t sid = static_cast<std::uint64_t>(cfg.seed_offset + s);
        runs[s] = run_efficiency_experiment(cfg.roster, cfg.controller, tasks, cfg.master_seed,
                                            &ts_sink, &rand_sink, sid);
        ts_logs[s] = ts_sink.str();
        rand_logs[s] = rand_sink.str();
    });

    Csv csv({"seed", "policy", "success_rate", "mean_rounds", "mean_cost",
             "mean_low_theta_calls", "mean_calls_to_success"});
    std::vector<double> low_diffs, call_diffs;
    std::vector<double> ts_low, rand_low, ts_calls, rand_calls;
    std::string ts_events, rand_events;
    for (int s = 0; s < cfg.seeds; ++s) {
        const EfficiencyResult& r = runs[s];
        for (const auto* sess : {&r.thompson, &r.random}) {
            csv.cell(cfg.seed_offset + s)
                .cell(std::string(sess == &r.thompson ? "thompson" : "random"))
                .cell(sess->success_rate)
                .cell(sess->mean_rounds)
                .cell(sess->mean_cost);
            double low = 0.0, calls = 0.0;
            for (const EpisodeRow& row : sess->rows) {
                low += row.low_theta_calls;
                calls += row.calls_to_success;
            }
            csv.cell(low / sess->rows.size()).cell(calls / sess->rows.size());
            csv.end_row();
        }
        for (std::size_t e = 0; e < r.thompson.rows.size(); ++e) {
            low_diffs.push_back(r.thompson.rows[e].low_theta_calls -
                                r.random.rows[e].low_theta_calls);
            call_diffs.push_back(r.thompson.rows[e].calls_to_success -
                                 r.random.rows[e].calls_to_success);
        }
        ts_low.push_back(r.mean_low_ts);
        rand_low.push_back(r.mean_low_rand);
        ts_calls.push_back(r.mean_calls_ts);
        rand_calls.push_back(r.mean_calls_rand);
        ts_events += ts_logs[s];
        rand_events += rand_logs[s];
    }

    const double p_low = paired_bootstrap_p(low_diffs);
    const double p_calls = paired_bootstrap_p(call_diffs);
    nlohmann::json summary{
        {"experiment", "efficiency"},
        {"seeds", cfg.seeds},
        {"tasks", static_cast<int>(tasks.size())},
        {"low_theta_calls",
         {{"thompson_mean", sig6(mean(ts_low))},
          {"random_mean", sig6(mean(rand_low))},
          {"diff_ci", ci_json(bootstrap_mean_ci(low_diffs))},
          {"p_value", sig6(p_low)}}},
        {"calls_to_success",
         {{"thompson_mean", sig6(mean(ts_calls))},
          {"random_mean", sig6(mean(rand_calls))},
          {"diff_ci", ci_json(bootstrap_mean_ci(call_diffs))},
          {"p_value", sig6(p_calls)}}}};

    Report rep(cfg);
    rep.line("tasks", std::to_string(tasks.size()));
    rep.line("low-theta calls thompson|random",
             format_sig6(mean(ts_low)) + " | " + format_sig6(mean(rand_low)));
    rep.line("calls-to-success thompson|random",
             format_sig6(mean(ts_calls)) + " | " + format_sig6(mean(rand_calls)));
    rep.line("p (low-theta diff)", p_low);
    rep.line("p (calls diff)", p_calls);

    RunArtifacts art;
    art.files["events_thompson.jsonl"] = ts_events;
    art.files["events_random.jsonl"] = rand_events;
    art.files["metrics.csv"] = csv.str();
    art.files["summary.json"] = summary.dump(2) + "\n";
    art.files["beliefs.json"] = beliefs_json(runs.front().thompson.last_beliefs);
    art.report = rep.str();
    return art;
}

inline RunArtifacts run_regret_kind(const ExperimentConfig& cfg) {
    const RegretSweepResult sweep =
        run_regret_sweep(cfg.regret.thetas, cfg.regret.sweep, cfg.regret.horizon, cfg.seeds,
                         cfg.master_seed, cfg.threads, cfg.seed_offset);

    Csv csv({"eps_fp", "eps_fn", "delta", "seed", "final_regret"});
    nlohmann::json conditions = nlohmann::json::array();
    Report rep(cfg);
    rep.line("horizon", std::to_string(cfg.regret.horizon));
    for (const RegretSweepCondition& c : sweep.conditions) {
        for (int s = 0; s < cfg.seeds; ++s) {
            csv.cell(c.eps_fp)
                .cell(c.eps_fn)
                .cell(c.delta)
                .cell(cfg.seed_offset + s)
                .cell(c.final_per_seed[s]);
            csv.end_row();
        }
        conditions.push_back({{"eps_fp", sig6(c.eps_fp)},
                              {"eps_fn", sig6(c.eps_fn)},
                              {"delta", sig6(c.delta)},
                              {"mean_final_regret", sig6(c.mean_final)},
                              {"ci", ci_json(c.ci)}});
        rep.line("R(T) at delta=" + format_sig6(c.delta), c.mean_final, c.ci);
    }

    nlohmann::json summary{{"experiment", "regret_sweep"},
                           {"seeds", cfg.seeds},
                           {"horizon", cfg.regret.horizon},
                           {"conditions", conditions}};

    RunArtifacts art;
    art.files["metrics.csv"] = csv.str();
    art.files["summary.json"] = summary.dump(2) + "\n";
    art.files["beliefs.json"] = "{}\n";  // no episodes, nothing to persist
    art.report = rep.str();
    return art;
}

inline RunArtifacts run_impairment_kind(const ExperimentConfig& cfg) {
    const std::vector<SimTaskSpec> tasks = generate_tasks(cfg.task_stream);
    std::ostringstream events;
    const ImpairmentResult res = run_impairment_experiment(
        cfg.roster, cfg.impaired_agent, cfg.flip_at, cfg.controller, tasks, cfg.seeds,
        cfg.master_seed, cfg.threads, &events, cfg.seed_offset);

    Csv csv({"seed", "phase1_selections", "phase2_selections", "selections_to_below_half",
             "phase1_quality", "phase2_quality"});
    for (const ImpairmentRow& r : res.rows) {
        csv.cell(r.seed)
            .cell(r.phase1_selections)
            .cell(r.phase2_selections)
            .cell(r.selections_to_below_half)
            .cell(r.phase1_quality)
            .cell(r.phase2_quality);
        csv.end_row();
    }

    const double ratio = res.mean_phase1_selections > 0.0
                             ? res.mean_phase2_selections / res.mean_phase1_selections
                             : 0.0;
    nlohmann::json summary{{"experiment", "impairment"},
                           {"seeds", cfg.seeds},
                           {"impaired_agent", cfg.impaired_agent},
                           {"flip_at", cfg.flip_at},
                           {"median_selections_to_below_half",
                            sig6(res.median_selections_to_below_half)},
                           {"mean_phase1_selections", sig6(res.mean_phase1_selections)},
                           {"mean_phase2_selections", sig6(res.mean_phase2_selections)},
                           {"phase2_over_phase1", sig6(ratio)},
                           {"mean_phase1_quality", sig6(res.mean_phase1_quality)},
                           {"mean_phase2_quality", sig6(res.mean_phase2_quality)}};

    Report rep(cfg);
    rep.line("impaired agent", cfg.impaired_agent + " (flips at task " +
                                   std::to_string(cfg.flip_at) + ")");
    rep.line("median selections to mu < 0.5", res.median_selections_to_below_half);
    rep.line("selections phase1|phase2",
             format_sig6(res.mean_phase1_selections) + " | " +
                 format_sig6(res.mean_phase2_selections));
    rep.line("phase2 / phase1", ratio);

    RunArtifacts art;
    art.files["events.jsonl"] = events.str();
    art.files["metrics.csv"] = csv.str();
    art.files["summary.json"] = summary.dump(2) + "\n";
    art.files["beliefs.json"] = "{}\n";  // per-seed worlds, no canonical table
    art.report = rep.str();
    return art;
}

inline RunArtifacts run_specialization_kind(const ExperimentConfig& cfg) {
    const std::vector<SimTaskSpec> tasks = generate_tasks(cfg.task_stream);
    std::ostringstream events;
    const SpecializationResult res =
        run_specialization_experiment(cfg.roster, cfg.expert, cfg.controller, tasks, cfg.seeds,
                                      cfg.master_seed, cfg.threads, &events, cfg.seed_offset);

    Csv csv({"seed", "first_half_mean_rounds", "second_half_mean_rounds"});
    for (const SpecializationRow& r : res.rows) {
        csv.cell(r.seed).cell(r.first_half_mean).cell(r.second_half_mean);
        csv.end_row();
    }

    std::vector<double> xs(res.mean_rounds_by_task.size());
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = static_cast<double>(i);
    const double slope = ols_slope(xs, res.mean_rounds_by_task);

    nlohmann::json summary{{"experiment", "specialization"},
                           {"seeds", cfg.seeds},
                           {"expert", cfg.expert},
                           {"first_half",
                            {{"mean", sig6(res.first_half_mean)},
                             {"ci", ci_json(res.first_half_ci)}}},
                           {"second_half",
                            {{"mean", sig6(res.second_half_mean)},
                             {"ci", ci_json(res.second_half_ci)}}},
                           {"cis_disjoint", res.cis_disjoint},
                           {"trend_slope", sig6(slope)}};

    Report rep(cfg);
    rep.line("expert", cfg.expert);
    rep.line("rounds-to-expert first half", res.first_half_mean, res.first_half_ci);
    rep.line("rounds-to-expert second half", res.second_half_mean, res.second_half_ci);
    rep.line("CIs disjoint", res.cis_disjoint ? "yes" : "no");
    rep.line("trend slope per task", slope);

    RunArtifacts art;
    art.files["events.jsonl"] = events.str();
    art.files["metrics.csv"] = csv.str();
    art.files["summary.json"] = summary.dump(2) + "\n";
    art.files["beliefs.json"] = "{}\n";
    art.report = rep.str();
    return art;
}

inline RunArtifacts run_memory_kind(const ExperimentConfig& cfg) {
    const std::vector<SimTaskSpec> tasks = generate_tasks(cfg.task_stream);
    std::ostringstream events;
    const MemoryPriorResult res =
        run_memory_prior_experiment(cfg.roster, cfg.memory_target, cfg.controller, tasks,
                                    cfg.seeds, cfg.master_seed, cfg.threads, &events,
                                    cfg.seed_offset);

    Csv csv({"seed", "first_pick_with_memory", "first_pick_without_memory"});
    for (const MemoryPriorRow& r : res.rows) {
        csv.cell(r.seed).cell(r.with_memory).cell(r.without_memory);
        csv.end_row();
    }

    nlohmann::json summary{{"experiment", "memory_priors"},
                           {"seeds", cfg.seeds},
                           {"target", cfg.memory_target},
                           {"rate_with_memory", sig6(res.rate_with)},
                           {"rate_without_memory", sig6(res.rate_without)},
                           {"p_value", sig6(res.p_value)}};

    Report rep(cfg);
    rep.line("target agent", cfg.memory_target);
    rep.line("first-pick rate with memory", res.rate_with);
    rep.line("first-pick rate without memory", res.rate_without);
    rep.line("p value", res.p_value);

    RunArtifacts art;
    art.files["events.jsonl"] = events.str();
    art.files["metrics.csv"] = csv.str();
    art.files["summary.json"] = summary.dump(2) + "\n";
    art.files["beliefs.json"] = "{}\n";
    art.report = rep.str();
    return art;
}

}  // namespace rundetail

inline RunArtifacts run_experiment(const ExperimentConfig& cfg) {
    switch (cfg.experiment) {
        case ExperimentKind::episode: return rundetail::run_episode_kind(cfg);
        case ExperimentKind::efficiency: return rundetail::run_efficiency_kind(cfg);
        case ExperimentKind::regret_sweep: return rundetail::run_regret_kind(cfg);
        case ExperimentKind::impairment: return rundetail::run_impairment_kind(cfg);
        case ExperimentKind::specialization: return rundetail::run_specialization_kind(cfg);
        case ExperimentKind::memory_priors: return rundetail::run_memory_kind(cfg);
    }
    throw ContractViolation("run_experiment: unknown experiment kind");
}

}  // namespace beliefroute
