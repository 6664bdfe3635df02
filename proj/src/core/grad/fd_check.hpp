#pragma once

#include <functional>

#include "core/common/rng.hpp"
#include "core/grad/tensor.hpp"

namespace asn::grad {

struct FdOptions {
    // 0 checks every coordinate; otherwise a seeded random subset.
    std::size_t max_coords = 0;
    std::uint64_t seed = 0;
    // Coordinates where |analytic - numeric| <= abs_guard are treated as
    // agreeing regardless of the relative measure. Near-zero gradients sit
    // below the resolution of central differences; machine-level agreement
    // there should not trip a relative bound. 0 disables the guard.
    double abs_guard = 0.0;
};

// Central-difference gradient check of a scalar-valued function at `point`.
// Returns the max relative discrepancy |a - n| / max(1e-8, |a| + |n|)
// between the analytic gradient (reverse sweep) and (f(x+eps*e) - f(x-eps*e)) / 2eps.
// `f` must be pure: it is re-invoked once per probe.
double finite_difference_check(const std::function<Tensor(const Tensor&)>& f,
                               const Tensor& point, double epsilon,
                               const FdOptions& options = {});

} // namespace asn::grad
