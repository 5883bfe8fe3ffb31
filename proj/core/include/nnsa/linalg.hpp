#pragma once

#include <optional>

#include "nnsa/matrix.hpp"

namespace nnsa {

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
class Cholesky {
public:
    /// Returns std::nullopt if a pivot is not safely positive.
    static std::optional<Cholesky> factor(const RealMatrix& spd);

    [[nodiscard]] RealVector solve(const RealVector& rhs) const;
    [[nodiscard]] std::size_t dim() const noexcept { return l_.rows(); }

private:
    explicit Cholesky(RealMatrix l) : l_(std::move(l)) {}
    RealMatrix l_;
};

struct SymmetricEigen {
    RealVector values;   ///< ascending eigenvalues
    RealMatrix vectors;  ///< orthonormal eigenvectors, one per column
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
[[nodiscard]] SymmetricEigen eigen_symmetric(const RealMatrix& sym);

/// Gershgorin upper bound on the largest eigenvalue of a symmetric matrix:
/// max_i sum_j |G_ij|.
[[nodiscard]] double gershgorin_max_eigenvalue(const RealMatrix& sym);

/// Symmetric submatrix G[idx, idx].
[[nodiscard]] RealMatrix submatrix(const RealMatrix& m, const std::vector<std::size_t>& rows,
                                   const std::vector<std::size_t>& cols);

}  // namespace nnsa
