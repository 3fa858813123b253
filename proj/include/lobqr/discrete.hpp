#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "lobqr/random.hpp"

namespace lobqr {

/// Finite distribution over integer values (queue sizes, order sizes).
class DiscreteDistribution {
public:
    DiscreteDistribution() = default;

    /// Weights need not be normalized; nonpositive weights are dropped.
    /// Throws ValueError when no weight is positive.
    explicit DiscreteDistribution(const std::map<std::int64_t, double>& weights);

    static DiscreteDistribution point(std::int64_t value);

    /// Empirical distribution of the given observations.
    static DiscreteDistribution from_samples(const std::vector<std::int64_t>& samples);

    bool empty() const { return values_.empty(); }
    std::int64_t sample(Rng& rng) const;
    double probability(std::int64_t value) const;
    double mean() const;

    const std::vector<std::int64_t>& values() const { return values_; }
    const std::vector<double>& probabilities() const { return probs_; }
    std::map<std::int64_t, double> as_map() const;

private:
    std::vector<std::int64_t> values_;
    std::vector<double> probs_;
    std::vector<double> cumulative_;
};

}  // namespace lobqr
