#pragma once

#include <cstdint>
#include <vector>

#include "fedmc/errors.hpp"
#include "fedmc/rng.hpp"

namespace fedmc {

enum class SamplingMode { fixed_size, bernoulli };

/// Client sampling scheme for one communication round. Fixed-size draws a
/// uniform subset of exactly `size` distinct clients (inclusion probability
/// size/p); bernoulli includes each client i independently with probs[i],
/// resampling if the subset comes up empty.
struct SamplingPolicy {
    SamplingMode mode = SamplingMode::fixed_size;
    std::size_t size = 0;
    std::vector<double> probs;
    std::uint64_t seed = 0;

    void validate(std::size_t p) const {
        if (mode == SamplingMode::fixed_size) {
            if (size < 1 || size > p)
                throw ConfigError("sample size must lie in [1, clients], got " +
                                  std::to_string(size));
        } else {
            if (probs.size() != p)
                throw ConfigError("bernoulli sampling needs one probability per client");
            for (const double q : probs)
                if (!(q > 0.0 && q <= 1.0))
                    throw ConfigError("bernoulli probabilities must lie in (0, 1]");
        }
    }

    static SamplingPolicy fixed(std::size_t size, std::uint64_t seed) {
        SamplingPolicy sp;
        sp.mode = SamplingMode::fixed_size;
        sp.size = size;
        sp.seed = seed;
        return sp;
    }
};

/// S_k for the given round: a sorted list of distinct client indices.
/// Deterministic in (policy.seed, round) alone, independent of call history.
inline std::vector<std::size_t> sample_clients(const SamplingPolicy& policy, std::size_t p,
                                               std::size_t round) {
    policy.validate(p);
    rng::Engine eng(rng::derive(policy.seed, 0x5a4d0000ULL + round));
    if (policy.mode == SamplingMode::fixed_size)
        return rng::sample_without_replacement(p, policy.size, eng);

    std::vector<std::size_t> subset;
    while (subset.empty()) {
        for (std::size_t i = 0; i < p; ++i)
            if (eng.uniform01() < policy.probs[i]) subset.push_back(i);
    }
    return subset;
}

} // namespace fedmc
