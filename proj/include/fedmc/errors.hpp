#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fedmc {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed input file; carries the 1-based line number.
struct ParseError : std::runtime_error {
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line(line) {}
    std::size_t line;
};

/// Non-finite state detected during a run; carries round/client context when known.
struct DivergenceError : std::runtime_error {
    explicit DivergenceError(const std::string& what)
        : std::runtime_error(what) {}
    DivergenceError(const std::string& what, std::size_t round, std::size_t client)
        : std::runtime_error(what + " (round " + std::to_string(round) +
                             ", client " + std::to_string(client) + ")"),
          round(round),
          client(client) {}
    std::size_t round = 0;
    std::size_t client = 0;
};

} // namespace fedmc
