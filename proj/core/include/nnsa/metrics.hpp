#pragma once

#include <vector>

#include "nnsa/matrix.hpp"

namespace nnsa {

struct RecoveryMetrics {
    double rel_err_support = 0.0;
    double mse_support = 0.0;
    double output_snr = 0.0;  ///< linear ratio; +inf / NaN sentinels possible
    bool support_recovered = false;
};

/// Power ratio between the on-support and off-support entries of x. Returns
/// +inf when the off-support power is zero and NaN for the all-zero vector;
/// both sentinels are excluded from aggregate means.
[[nodiscard]] double output_snr(const RealVector& x, const std::vector<std::size_t>& support);

/// True iff the largest off-support entry is strictly below the smallest
/// on-support entry, i.e. a single threshold separates the support.
[[nodiscard]] bool support_recovered(const RealVector& x, const std::vector<std::size_t>& support);

/// ||x_S - x0_S||_2 / ||x0_S||_2. Throws std::invalid_argument when the
/// reference has no energy on the support.
[[nodiscard]] double rel_err_support(const RealVector& x, const RealVector& x0,
                                     const std::vector<std::size_t>& support);

/// Mean squared error restricted to the support.
[[nodiscard]] double mse_support(const RealVector& x, const RealVector& x0,
                                 const std::vector<std::size_t>& support);

[[nodiscard]] RecoveryMetrics evaluate_recovery(const RealVector& x, const RealVector& x0,
                                                const std::vector<std::size_t>& support);

}  // namespace nnsa
