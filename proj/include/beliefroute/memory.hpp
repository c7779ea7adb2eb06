#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <mutex>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "beliefroute/beliefs.hpp"
#include "beliefroute/errors.hpp"

namespace beliefroute {

/// One routed outcome: which agent acted on which task embedding, how it
/// went, and when (task-index time).
struct MemoryRecord {
    std::vector<double> embedding;
    AgentId agent;
    int outcome = 0;  // 0 or 1
    std::string rationale;
    double timestamp = 0.0;
};

enum class Kernel { cosine, dot, rbf };

inline const char* to_string(Kernel k) {
    switch (k) {
        case Kernel::cosine: return "cosine";
        case Kernel::dot: return "dot";
        case Kernel::rbf: return "rbf";
    }
    return "?";
}

struct PriorConfig {
    double alpha0 = 1.0;
    double beta0 = 1.0;
    double lambda = 0.1;  // temporal decay rate
    Kernel kernel = Kernel::cosine;
    double rbf_gamma = 1.0;  // length-scale for the rbf kernel
};

/// Task similarity. Cosine returns a value in [-1, 1]; negative values are
/// clamped to zero later, at weighting time, since kernel weights feed
/// pseudo-counts and must be non-negative.
inline double similarity(std::span<const double> a, std::span<const double> b, Kernel kernel,
                         double rbf_gamma = 1.0) {
    if (a.size() != b.size()) {
        throw ContractViolation("similarity: embedding dimensions differ");
    }
    switch (kernel) {
        case Kernel::dot: {
            double d = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) d += a[i] * b[i];
            return d;
        }
        case Kernel::rbf: {
            double sq = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) {
                const double diff = a[i] - b[i];
                sq += diff * diff;
            }
            return std::exp(-rbf_gamma * sq);
        }
        case Kernel::cosine: {
            double d = 0.0, na = 0.0, nb = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) {
                d += a[i] * b[i];
                na += a[i] * a[i];
                nb += b[i] * b[i];
            }
            if (na == 0.0 || nb == 0.0) {
                throw ContractViolation("similarity: cosine undefined for zero vector");
            }
            return d / (std::sqrt(na) * std::sqrt(nb));
        }
    }
    throw ContractViolation("similarity: unknown kernel");
}

/// Append-only outcome log. Single writer; readers take snapshots.
class MemoryStore {
public:
    MemoryStore() = default;
    MemoryStore(const MemoryStore& other) : records_(other.snapshot()) {}
    MemoryStore(MemoryStore&& other) noexcept {
        std::lock_guard<std::mutex> lock(other.mutex_);
        records_ = std::move(other.records_);
    }
    MemoryStore& operator=(MemoryStore other) noexcept {
        std::lock_guard<std::mutex> lock(mutex_);
        records_ = std::move(other.records_);
        return *this;
    }

    void append(MemoryRecord rec) {
        std::lock_guard<std::mutex> lock(mutex_);
        if (!records_.empty()) {
            if (rec.embedding.size() != records_.front().embedding.size()) {
                throw ContractViolation("MemoryStore: embedding dimension changed");
            }
            if (rec.timestamp < records_.back().timestamp) {
                throw ContractViolation("MemoryStore: timestamps must be non-decreasing");
            }
        }
        records_.push_back(std::move(rec));
    }

    [[nodiscard]] std::vector<MemoryRecord> snapshot() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return records_;
    }

    [[nodiscard]] std::size_t size() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return records_.size();
    }

    /// JSONL, one record per line:
    /// {"embedding": [...], "agent": "...", "outcome": 0|1, "rationale": "...", "t": ...}
    void save_jsonl(std::ostream& out) const {
        for (const auto& r : snapshot()) {
            nlohmann::json j{{"embedding", r.embedding},
                             {"agent", r.agent},
                             {"outcome", r.outcome},
                             {"rationale", r.rationale},
                             {"t", r.timestamp}};
            out << j.dump() << '\n';
        }
    }

    static MemoryStore load_jsonl(std::istream& in) {
        MemoryStore store;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const nlohmann::json::parse_error& e) {
                throw ConfigError("memory JSONL parse error at line " + std::to_string(lineno) +
                                  ": " + e.what());
            }
            MemoryRecord r;
            r.embedding = j.at("embedding").get<std::vector<double>>();
            r.agent = j.at("agent").get<std::string>();
            r.outcome = j.at("outcome").get<int>();
            r.rationale = j.value("rationale", std::string{});
            r.timestamp = j.at("t").get<double>();
            store.append(std::move(r));
        }
        return store;
    }

private:
    mutable std::mutex mutex_;
    std::vector<MemoryRecord> records_;
};

/// Seed per-agent priors from past outcomes, weighted by task similarity and
/// exponential recency decay exp(-lambda * (now - t)). Each record adds
/// kernel-weighted fractional evidence to the acting agent only; agents with
/// no history keep (alpha0, beta0). Cooldowns start at zero.
inline BeliefTable init_priors(std::span<const double> query_embedding,
                               std::span<const MemoryRecord> store, double now,
                               const PriorConfig& cfg, std::span<const AgentId> roster) {
    if (cfg.alpha0 <= 0.0 || cfg.beta0 <= 0.0) {
        throw ConfigError("init_priors: alpha0 and beta0 must be positive");
    }
    BeliefTable table;
    for (const AgentId& id : roster) {
        table[id] = BeliefState{cfg.alpha0, cfg.beta0, 0, 0};
    }
    for (const MemoryRecord& rec : store) {
        if (now < rec.timestamp) {
            throw ContractViolation("init_priors: now precedes a stored timestamp");
        }
        auto it = table.find(rec.agent);
        if (it == table.end()) continue;  // record from an agent outside this roster
        const double k =
            std::max(0.0, similarity(query_embedding, rec.embedding, cfg.kernel, cfg.rbf_gamma));
        const double w = k * std::exp(-cfg.lambda * (now - rec.timestamp));
        it->second.alpha += w * rec.outcome;
        it->second.beta += w * (1 - rec.outcome);
    }
    return table;
}

}  // namespace beliefroute
