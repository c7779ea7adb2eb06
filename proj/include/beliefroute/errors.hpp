#pragma once

#include <stdexcept>
#include <string>

namespace beliefroute {

/// User-supplied configuration is unusable (bad channel, empty roster, ...).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A caller broke an API precondition.
class ContractViolation : public std::logic_error {
public:
    explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

}  // namespace beliefroute
