#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace nnsa {

/// Dense real vector, double precision.
class RealVector {
public:
    RealVector() = default;
    explicit RealVector(std::size_t len, double fill = 0.0) : entries_(len, fill) {}
    RealVector(std::initializer_list<double> values) : entries_(values) {}

    /// Takes ownership of `entries`; throws std::invalid_argument on non-finite values.
    static RealVector from_data(std::vector<double> entries);

    [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
    [[nodiscard]] bool empty() const noexcept { return entries_.empty(); }

    double& operator[](std::size_t i) noexcept { return entries_[i]; }
    double operator[](std::size_t i) const noexcept { return entries_[i]; }

    double* data() noexcept { return entries_.data(); }
    [[nodiscard]] const double* data() const noexcept { return entries_.data(); }
    [[nodiscard]] std::span<const double> span() const noexcept { return entries_; }

    [[nodiscard]] bool all_finite() const noexcept;

    auto begin() noexcept { return entries_.begin(); }
    auto end() noexcept { return entries_.end(); }
    [[nodiscard]] auto begin() const noexcept { return entries_.begin(); }
    [[nodiscard]] auto end() const noexcept { return entries_.end(); }

    friend bool operator==(const RealVector&, const RealVector&) = default;

private:
    std::vector<double> entries_;
};

/// Dense real matrix, row-major, double precision.
class RealMatrix {
public:
    RealMatrix() = default;
    RealMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), entries_(rows * cols, fill) {}

    /// Row-major construction from nested braces, e.g. {{1, 2}, {3, 4}}.
    RealMatrix(std::initializer_list<std::initializer_list<double>> rows);

    /// Takes ownership of row-major `entries`; validates size and finiteness.
    static RealMatrix from_data(std::size_t rows, std::size_t cols, std::vector<double> entries);

    static RealMatrix identity(std::size_t n);

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return entries_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return entries_[r * cols_ + c]; }

    double* data() noexcept { return entries_.data(); }
    [[nodiscard]] const double* data() const noexcept { return entries_.data(); }

    /// Contiguous view of row r.
    [[nodiscard]] std::span<const double> row(std::size_t r) const noexcept {
        return {entries_.data() + r * cols_, cols_};
    }

    [[nodiscard]] bool all_finite() const noexcept;

    friend bool operator==(const RealMatrix&, const RealMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> entries_;
};

/// A * v. Throws std::invalid_argument on dimension mismatch.
[[nodiscard]] RealVector matvec(const RealMatrix& a, const RealVector& v);

/// A^T * v. Throws std::invalid_argument on dimension mismatch.
[[nodiscard]] RealVector matvec_transposed(const RealMatrix& a, const RealVector& v);

/// A^T * A. Upper triangle is computed once and mirrored, so the result is
/// symmetric to the bit. Throws std::invalid_argument if `a` is empty.
[[nodiscard]] RealMatrix gram(const RealMatrix& a);

/// Scales every column to unit Euclidean norm. Throws std::invalid_argument
/// if any column is the zero vector.
[[nodiscard]] RealMatrix normalize_columns(const RealMatrix& a);

[[nodiscard]] double dot(const RealVector& a, const RealVector& b);
[[nodiscard]] double norm2(const RealVector& v);
[[nodiscard]] double norm_inf(const RealVector& v);

}  // namespace nnsa
