#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include <vector>

#include "lobqr/neural.hpp"

namespace oracle {

struct GradCheck {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    /// Largest analytic gradient of a hidden bias; batch norm cancels these
    /// biases, so their gradient is identically zero and excluded from the ratio.
    double max_bn_bias_grad = 0.0;
};

/// Random network of the given shape with output biases pushed away from the
/// ReLU kink, random inputs and targets, fourth-order central differences on every
/// parameter (or `max_params` randomly chosen entries when nonzero).
GradCheck check_gradients(lobqr::LossKind loss, const std::vector<int>& hidden, int batch, std::uint64_t seed,
                          std::size_t max_params = 0);

/// Random inputs matching a layout.
lobqr::Inputs random_inputs(const lobqr::InputLayout& layout, int n, lobqr::Rng& rng);

}  // namespace oracle
