#include "nnsa/matrix.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace nnsa {

namespace {

bool finite_range(const double* p, std::size_t n) noexcept {
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(p[i])) return false;
    }
    return true;
}

}  // namespace

RealVector RealVector::from_data(std::vector<double> entries) {
    RealVector v;
    v.entries_ = std::move(entries);
    if (!v.all_finite()) throw std::invalid_argument("RealVector: non-finite entry");
    return v;
}

bool RealVector::all_finite() const noexcept {
    return finite_range(entries_.data(), entries_.size());
}

RealMatrix::RealMatrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    entries_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw std::invalid_argument("RealMatrix: ragged initializer");
        entries_.insert(entries_.end(), r.begin(), r.end());
    }
}

RealMatrix RealMatrix::from_data(std::size_t rows, std::size_t cols, std::vector<double> entries) {
    if (entries.size() != rows * cols) {
        throw std::invalid_argument("RealMatrix: entry count does not match rows*cols");
    }
    RealMatrix m;
    m.rows_ = rows;
    m.cols_ = cols;
    m.entries_ = std::move(entries);
    if (!m.all_finite()) throw std::invalid_argument("RealMatrix: non-finite entry");
    return m;
}

RealMatrix RealMatrix::identity(std::size_t n) {
    RealMatrix m(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

bool RealMatrix::all_finite() const noexcept {
    return finite_range(entries_.data(), entries_.size());
}

RealVector matvec(const RealMatrix& a, const RealVector& v) {
    if (a.cols() != v.size()) throw std::invalid_argument("matvec: dimension mismatch");
    RealVector out(a.rows());
    const double* row = a.data();
    for (std::size_t r = 0; r < a.rows(); ++r, row += a.cols()) {
        double acc = 0.0;
        for (std::size_t c = 0; c < a.cols(); ++c) acc += row[c] * v[c];
        out[r] = acc;
    }
    return out;
}

RealVector matvec_transposed(const RealMatrix& a, const RealVector& v) {
    if (a.rows() != v.size()) throw std::invalid_argument("matvec_transposed: dimension mismatch");
    RealVector out(a.cols(), 0.0);
    const double* row = a.data();
    for (std::size_t r = 0; r < a.rows(); ++r, row += a.cols()) {
        const double vr = v[r];
        for (std::size_t c = 0; c < a.cols(); ++c) out[c] += row[c] * vr;
    }
    return out;
}

RealMatrix gram(const RealMatrix& a) {
    if (a.rows() == 0 || a.cols() == 0) throw std::invalid_argument("gram: empty matrix");
    const std::size_t n = a.cols();
    RealMatrix g(n, n, 0.0);
    // Accumulate row outer products; touches A sequentially.
    const double* row = a.data();
    for (std::size_t r = 0; r < a.rows(); ++r, row += n) {
        for (std::size_t i = 0; i < n; ++i) {
            const double ri = row[i];
            if (ri == 0.0) continue;
            double* gi = g.data() + i * n;
            for (std::size_t j = i; j < n; ++j) gi[j] += ri * row[j];
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) g(j, i) = g(i, j);
    }
    return g;
}

RealMatrix normalize_columns(const RealMatrix& a) {
    std::vector<double> sq(a.cols(), 0.0);
    const double* row = a.data();
    for (std::size_t r = 0; r < a.rows(); ++r, row += a.cols()) {
        for (std::size_t c = 0; c < a.cols(); ++c) sq[c] += row[c] * row[c];
    }
    std::vector<double> inv(a.cols());
    for (std::size_t c = 0; c < a.cols(); ++c) {
        if (sq[c] == 0.0) throw std::invalid_argument("normalize_columns: zero column");
        inv[c] = 1.0 / std::sqrt(sq[c]);
    }
    RealMatrix out(a.rows(), a.cols());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t c = 0; c < a.cols(); ++c) out(r, c) = a(r, c) * inv[c];
    }
    return out;
}

double dot(const RealVector& a, const RealVector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double norm2(const RealVector& v) { return std::sqrt(dot(v, v)); }

double norm_inf(const RealVector& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace nnsa
