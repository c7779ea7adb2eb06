#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "beliefroute/controller.hpp"
#include "beliefroute/errors.hpp"
#include "beliefroute/experiments.hpp"
#include "beliefroute/simulation.hpp"

namespace beliefroute {

enum class ExperimentKind { episode, efficiency, regret_sweep, impairment, specialization,
                            memory_priors };

inline const char* to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::episode: return "episode";
        case ExperimentKind::efficiency: return "efficiency";
        case ExperimentKind::regret_sweep: return "regret_sweep";
        case ExperimentKind::impairment: return "impairment";
        case ExperimentKind::specialization: return "specialization";
        case ExperimentKind::memory_priors: return "memory_priors";
    }
    return "?";
}

struct RegretSection {
    std::vector<double> thetas;
    long horizon = 10000;
    std::vector<std::pair<double, double>> sweep;  // (eps_fp, eps_fn)
};

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::episode;
    int seeds = 1;
    int seed_offset = 0;
    std::uint64_t master_seed = 42;
    int threads = 1;
    std::string output_dir = "out";
    ControllerConfig controller;
    std::vector<SimAgentSpec> roster;
    TaskStreamConfig task_stream;
    AgentId impaired_agent;  // impairment
    long flip_at = 0;        // impairment
    AgentId expert;          // specialization
    AgentId memory_target;   // memory_priors
    RegretSection regret;
};

namespace cfgdetail {

using nlohmann::json;

inline void check_keys(const json& j, std::initializer_list<const char*> allowed,
                       const std::string& path) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError("unknown key '" + path + "." + key + "'");
    }
}

inline const json& require(const json& j, const char* key, const std::string& path) {
    auto it = j.find(key);
    if (it == j.end()) throw ConfigError("missing required key '" + path + "." + key + "'");
    return *it;
}

inline double num(const json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError("'" + path + "' must be a number");
    return j.get<double>();
}

inline long integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) throw ConfigError("'" + path + "' must be an integer");
    return j.get<long>();
}

inline std::string str(const json& j, const std::string& path) {
    if (!j.is_string()) throw ConfigError("'" + path + "' must be a string");
    return j.get<std::string>();
}

inline bool boolean(const json& j, const std::string& path) {
    if (!j.is_boolean()) throw ConfigError("'" + path + "' must be a boolean");
    return j.get<bool>();
}

inline const json& object(const json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError("'" + path + "' must be an object");
    return j;
}

inline const json& array(const json& j, const std::string& path) {
    if (!j.is_array()) throw ConfigError("'" + path + "' must be an array");
    return j;
}

inline Kernel parse_kernel(const std::string& s, const std::string& path) {
    if (s == "cosine") return Kernel::cosine;
    if (s == "dot") return Kernel::dot;
    if (s == "rbf") return Kernel::rbf;
    throw ConfigError("'" + path + "' must be one of cosine|dot|rbf, got '" + s + "'");
}

inline PriorConfig parse_prior(const json& j, const std::string& path) {
    object(j, path);
    check_keys(j, {"alpha0", "beta0", "lambda", "kernel", "rbf_gamma"}, path);
    PriorConfig p;
    if (j.contains("alpha0")) p.alpha0 = num(j["alpha0"], path + ".alpha0");
    if (j.contains("beta0")) p.beta0 = num(j["beta0"], path + ".beta0");
    if (j.contains("lambda")) p.lambda = num(j["lambda"], path + ".lambda");
    if (j.contains("kernel")) p.kernel = parse_kernel(str(j["kernel"], path + ".kernel"),
                                                     path + ".kernel");
    if (j.contains("rbf_gamma")) p.rbf_gamma = num(j["rbf_gamma"], path + ".rbf_gamma");
    if (p.alpha0 <= 0.0 || p.beta0 <= 0.0) {
        throw ConfigError("'" + path + "': alpha0 and beta0 must be positive");
    }
    if (p.lambda < 0.0) throw ConfigError("'" + path + ".lambda' must be >= 0");
    return p;
}

inline JudgeChannel parse_channel(const json& j, const std::string& path) {
    object(j, path);
    check_keys(j, {"eps_fp", "eps_fn"}, path);
    double fp = 0.0, fn = 0.0;
    if (j.contains("eps_fp")) fp = num(j["eps_fp"], path + ".eps_fp");
    if (j.contains("eps_fn")) fn = num(j["eps_fn"], path + ".eps_fn");
    try {
        return JudgeChannel(fp, fn);
    } catch (const ConfigError& e) {
        throw ConfigError("'" + path + "': " + e.what());
    }
}

inline ControllerConfig parse_controller(const json& j, const std::string& path) {
    object(j, path);
    check_keys(j,
               {"max_depth", "budget", "cooldown", "plateau_window", "judge_threshold", "judge",
                "ensemble", "trust_floor", "forced_release", "prior"},
               path);
    ControllerConfig c;
    if (j.contains("max_depth"))
        c.max_depth = static_cast<int>(integer(j["max_depth"], path + ".max_depth"));
    if (j.contains("budget")) c.budget = num(j["budget"], path + ".budget");
    if (j.contains("cooldown"))
        c.cooldown = static_cast<int>(integer(j["cooldown"], path + ".cooldown"));
    if (j.contains("plateau_window"))
        c.plateau_window = static_cast<int>(integer(j["plateau_window"], path + ".plateau_window"));
    if (j.contains("judge_threshold"))
        c.judge_threshold = num(j["judge_threshold"], path + ".judge_threshold");
    if (j.contains("judge")) c.channel = parse_channel(j["judge"], path + ".judge");
    if (j.contains("ensemble")) c.ensemble = boolean(j["ensemble"], path + ".ensemble");
    if (j.contains("trust_floor")) c.trust_floor = num(j["trust_floor"], path + ".trust_floor");
    if (j.contains("forced_release")) {
        const std::string mode = str(j["forced_release"], path + ".forced_release");
        if (mode == "min_cooldown") {
            c.forced_release = ForcedRelease::min_cooldown;
        } else if (mode == "max_cooldown") {
            c.forced_release = ForcedRelease::max_cooldown;
        } else {
            throw ConfigError("'" + path +
                              ".forced_release' must be min_cooldown|max_cooldown, got '" + mode +
                              "'");
        }
    }
    if (j.contains("prior")) c.prior = parse_prior(j["prior"], path + ".prior");
    c.validate();
    return c;
}

inline SimAgentSpec parse_agent(const json& j, const std::string& path) {
    object(j, path);
    check_keys(j, {"id", "theta", "schedule", "domain", "domain_boost", "cost"}, path);
    SimAgentSpec spec;
    spec.id = str(require(j, "id", path), path + ".id");
    if (spec.id.empty()) throw ConfigError("'" + path + ".id' must be non-empty");
    const bool has_theta = j.contains("theta");
    const bool has_schedule = j.contains("schedule");
    if (has_theta == has_schedule) {
        throw ConfigError("'" + path + "' needs exactly one of theta or schedule");
    }
    if (has_theta) {
        spec.schedule = {{0, num(j["theta"], path + ".theta")}};
    } else {
        const json& sched = array(j["schedule"], path + ".schedule");
        for (std::size_t i = 0; i < sched.size(); ++i) {
            const std::string p = path + ".schedule[" + std::to_string(i) + "]";
            object(sched[i], p);
            check_keys(sched[i], {"from", "theta"}, p);
            spec.schedule.push_back({integer(require(sched[i], "from", p), p + ".from"),
                                     num(require(sched[i], "theta", p), p + ".theta")});
        }
    }
    if (j.contains("domain")) spec.domain_tag = str(j["domain"], path + ".domain");
    if (j.contains("domain_boost"))
        spec.domain_boost = num(j["domain_boost"], path + ".domain_boost");
    if (j.contains("cost")) spec.cost_per_call = num(j["cost"], path + ".cost");
    if (spec.cost_per_call <= 0.0) throw ConfigError("'" + path + ".cost' must be positive");
    try {
        spec.validate();
    } catch (const std::exception& e) {
        throw ConfigError("'" + path + "': " + e.what());
    }
    return spec;
}

inline TaskStreamConfig parse_task_stream(const json& j, const std::string& path) {
    object(j, path);
    check_keys(j, {"count", "embedding_dim", "seed", "noise", "domains"}, path);
    TaskStreamConfig t;
    if (j.contains("count")) t.count = static_cast<int>(integer(j["count"], path + ".count"));
    if (j.contains("embedding_dim"))
        t.embedding_dim = static_cast<int>(integer(j["embedding_dim"], path + ".embedding_dim"));
    if (j.contains("seed"))
        t.seed = static_cast<std::uint64_t>(integer(j["seed"], path + ".seed"));
    if (j.contains("noise")) t.noise = num(j["noise"], path + ".noise");
    if (j.contains("domains")) {
        const json& doms = array(j["domains"], path + ".domains");
        for (std::size_t i = 0; i < doms.size(); ++i) {
            const std::string p = path + ".domains[" + std::to_string(i) + "]";
            object(doms[i], p);
            check_keys(doms[i], {"label", "weight"}, p);
            DomainMix d;
            d.label = str(require(doms[i], "label", p), p + ".label");
            if (doms[i].contains("weight")) d.weight = num(doms[i]["weight"], p + ".weight");
            t.domains.push_back(std::move(d));
        }
    }
    try {
        t.validate();
    } catch (const std::exception& e) {
        throw ConfigError("'" + path + "': " + e.what());
    }
    return t;
}

inline RegretSection parse_regret(const json& j, const std::string& path) {
    object(j, path);
    check_keys(j, {"thetas", "horizon", "sweep"}, path);
    RegretSection r;
    const json& thetas = array(require(j, "thetas", path), path + ".thetas");
    for (std::size_t i = 0; i < thetas.size(); ++i) {
        const double th = num(thetas[i], path + ".thetas[" + std::to_string(i) + "]");
        if (!(th >= 0.0 && th <= 1.0)) {
            throw ConfigError("'" + path + ".thetas[" + std::to_string(i) +
                              "]' must lie in [0, 1]");
        }
        r.thetas.push_back(th);
    }
    if (r.thetas.empty()) throw ConfigError("'" + path + ".thetas' must be non-empty");
    if (j.contains("horizon")) r.horizon = integer(j["horizon"], path + ".horizon");
    if (r.horizon < 1) throw ConfigError("'" + path + ".horizon' must be >= 1");
    if (j.contains("sweep")) {
        const json& sweep = array(j["sweep"], path + ".sweep");
        for (std::size_t i = 0; i < sweep.size(); ++i) {
            const std::string p = path + ".sweep[" + std::to_string(i) + "]";
            // constructing the channel enforces delta > 0 before any run starts
            const JudgeChannel ch = parse_channel(sweep[i], p);
            r.sweep.emplace_back(ch.eps_fp(), ch.eps_fn());
        }
    }
    if (r.sweep.empty()) r.sweep.emplace_back(0.0, 0.0);
    return r;
}

}  // namespace cfgdetail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
    using namespace cfgdetail;
    object(j, "config");
    check_keys(j,
               {"experiment", "seeds", "seed_offset", "master_seed", "threads", "output_dir",
                "controller", "roster", "task_stream", "impairment", "specialization",
                "memory_priors", "regret"},
               "config");

    ExperimentConfig cfg;
    const std::string kind = str(require(j, "experiment", "config"), "config.experiment");
    if (kind == "episode") {
        cfg.experiment = ExperimentKind::episode;
    } else if (kind == "efficiency") {
        cfg.experiment = ExperimentKind::efficiency;
    } else if (kind == "regret_sweep") {
        cfg.experiment = ExperimentKind::regret_sweep;
    } else if (kind == "impairment") {
        cfg.experiment = ExperimentKind::impairment;
    } else if (kind == "specialization") {
        cfg.experiment = ExperimentKind::specialization;
    } else if (kind == "memory_priors") {
        cfg.experiment = ExperimentKind::memory_priors;
    } else {
        throw ConfigError(
            "'config.experiment' must be one of "
            "episode|efficiency|regret_sweep|impairment|specialization|memory_priors, got '" +
            kind + "'");
    }

    if (j.contains("seeds")) cfg.seeds = static_cast<int>(integer(j["seeds"], "config.seeds"));
    if (cfg.seeds < 1) throw ConfigError("'config.seeds' must be >= 1");
    if (j.contains("seed_offset"))
        cfg.seed_offset = static_cast<int>(integer(j["seed_offset"], "config.seed_offset"));
    if (cfg.seed_offset < 0) throw ConfigError("'config.seed_offset' must be >= 0");
    if (j.contains("master_seed"))
        cfg.master_seed = static_cast<std::uint64_t>(integer(j["master_seed"],
                                                             "config.master_seed"));
    if (j.contains("threads"))
        cfg.threads = static_cast<int>(integer(j["threads"], "config.threads"));
    if (cfg.threads < 1) throw ConfigError("'config.threads' must be >= 1");
    if (j.contains("output_dir")) cfg.output_dir = str(j["output_dir"], "config.output_dir");

    if (j.contains("controller")) {
        cfg.controller = parse_controller(j["controller"], "config.controller");
    }

    const bool needs_roster = cfg.experiment != ExperimentKind::regret_sweep;
    if (needs_roster) {
        const nlohmann::json& roster =
            array(require(j, "roster", "config"), "config.roster");
        std::set<AgentId> seen;
        for (std::size_t i = 0; i < roster.size(); ++i) {
            SimAgentSpec spec =
                parse_agent(roster[i], "config.roster[" + std::to_string(i) + "]");
            if (!seen.insert(spec.id).second) {
                throw ConfigError("'config.roster': duplicate agent id '" + spec.id + "'");
            }
            cfg.roster.push_back(std::move(spec));
        }
        if (cfg.roster.empty()) throw ConfigError("'config.roster' must be non-empty");
        if (j.contains("task_stream")) {
            cfg.task_stream = parse_task_stream(j["task_stream"], "config.task_stream");
        }
    }

    auto roster_ref = [&](const AgentId& id, const std::string& path) {
        for (const SimAgentSpec& s : cfg.roster) {
            if (s.id == id) return;
        }
        throw ConfigError("'" + path + "' names agent '" + id + "' which is not in the roster");
    };

    switch (cfg.experiment) {
        case ExperimentKind::impairment: {
            const nlohmann::json& sec =
                object(require(j, "impairment", "config"), "config.impairment");
            check_keys(sec, {"agent", "flip_at"}, "config.impairment");
            cfg.impaired_agent =
                str(require(sec, "agent", "config.impairment"), "config.impairment.agent");
            cfg.flip_at = integer(require(sec, "flip_at", "config.impairment"),
                                  "config.impairment.flip_at");
            roster_ref(cfg.impaired_agent, "config.impairment.agent");
            break;
        }
        case ExperimentKind::specialization: {
            const nlohmann::json& sec =
                object(require(j, "specialization", "config"), "config.specialization");
            check_keys(sec, {"expert"}, "config.specialization");
            cfg.expert = str(require(sec, "expert", "config.specialization"),
                             "config.specialization.expert");
            roster_ref(cfg.expert, "config.specialization.expert");
            break;
        }
        case ExperimentKind::memory_priors: {
            const nlohmann::json& sec =
                object(require(j, "memory_priors", "config"), "config.memory_priors");
            check_keys(sec, {"target"}, "config.memory_priors");
            cfg.memory_target = str(require(sec, "target", "config.memory_priors"),
                                    "config.memory_priors.target");
            roster_ref(cfg.memory_target, "config.memory_priors.target");
            break;
        }
        case ExperimentKind::regret_sweep: {
            cfg.regret = cfgdetail::parse_regret(require(j, "regret", "config"), "config.regret");
            break;
        }
        default: break;
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

}  // namespace beliefroute
