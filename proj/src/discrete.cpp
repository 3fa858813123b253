#include "lobqr/discrete.hpp"

#include <algorithm>

#include "lobqr/errors.hpp"

namespace lobqr {

DiscreteDistribution::DiscreteDistribution(const std::map<std::int64_t, double>& weights) {
    double total = 0.0;
    for (const auto& [value, w] : weights) {
        if (w > 0.0) {
            values_.push_back(value);
            probs_.push_back(w);
            total += w;
        }
    }
    if (values_.empty()) throw ValueError("discrete distribution has no positive weight");
    double acc = 0.0;
    for (double& p : probs_) {
        p /= total;
        acc += p;
        cumulative_.push_back(acc);
    }
    cumulative_.back() = 1.0;
}

DiscreteDistribution DiscreteDistribution::point(std::int64_t value) { return DiscreteDistribution({{value, 1.0}}); }

DiscreteDistribution DiscreteDistribution::from_samples(const std::vector<std::int64_t>& samples) {
    std::map<std::int64_t, double> counts;
    for (auto s : samples) counts[s] += 1.0;
    return DiscreteDistribution(counts);
}

std::int64_t DiscreteDistribution::sample(Rng& rng) const {
    if (values_.size() == 1) return values_.front();
    const double u = rng.uniform();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    const auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), values_.size() - 1);
    return values_[idx];
}

double DiscreteDistribution::probability(std::int64_t value) const {
    const auto it = std::lower_bound(values_.begin(), values_.end(), value);
    if (it == values_.end() || *it != value) return 0.0;
    return probs_[static_cast<std::size_t>(it - values_.begin())];
}

double DiscreteDistribution::mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) m += static_cast<double>(values_[i]) * probs_[i];
    return m;
}

std::map<std::int64_t, double> DiscreteDistribution::as_map() const {
    std::map<std::int64_t, double> out;
    for (std::size_t i = 0; i < values_.size(); ++i) out[values_[i]] = probs_[i];
    return out;
}

}  // namespace lobqr
