#include "nnsa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace nnsa {

namespace {

void check_support(const RealVector& x, const std::vector<std::size_t>& support) {
    for (std::size_t i : support) {
        if (i >= x.size()) throw std::invalid_argument("support index out of range");
    }
}

}  // namespace

double output_snr(const RealVector& x, const std::vector<std::size_t>& support) {
    check_support(x, support);
    std::vector<bool> on(x.size(), false);
    for (std::size_t i : support) on[i] = true;
    double sig = 0.0, off = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        (on[i] ? sig : off) += x[i] * x[i];
    }
    if (off == 0.0) {
        return sig == 0.0 ? std::numeric_limits<double>::quiet_NaN()
                          : std::numeric_limits<double>::infinity();
    }
    return sig / off;
}

bool support_recovered(const RealVector& x, const std::vector<std::size_t>& support) {
    if (support.empty() || support.size() >= x.size()) {
        throw std::invalid_argument("support_recovered: support must be a nonempty proper subset");
    }
    check_support(x, support);
    std::vector<bool> on(x.size(), false);
    for (std::size_t i : support) on[i] = true;
    double min_on = std::numeric_limits<double>::infinity();
    double max_off = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (on[i]) min_on = std::min(min_on, x[i]);
        else max_off = std::max(max_off, x[i]);
    }
    return max_off < min_on;
}

double rel_err_support(const RealVector& x, const RealVector& x0,
                       const std::vector<std::size_t>& support) {
    if (x.size() != x0.size()) throw std::invalid_argument("rel_err_support: length mismatch");
    if (support.empty()) throw std::invalid_argument("rel_err_support: empty support");
    check_support(x, support);
    double num = 0.0, den = 0.0;
    for (std::size_t i : support) {
        const double d = x[i] - x0[i];
        num += d * d;
        den += x0[i] * x0[i];
    }
    if (den == 0.0) throw std::invalid_argument("rel_err_support: reference has no support energy");
    return std::sqrt(num / den);
}

double mse_support(const RealVector& x, const RealVector& x0,
                   const std::vector<std::size_t>& support) {
    if (x.size() != x0.size()) throw std::invalid_argument("mse_support: length mismatch");
    if (support.empty()) throw std::invalid_argument("mse_support: empty support");
    check_support(x, support);
    double acc = 0.0;
    for (std::size_t i : support) {
        const double d = x[i] - x0[i];
        acc += d * d;
    }
    return acc / static_cast<double>(support.size());
}

RecoveryMetrics evaluate_recovery(const RealVector& x, const RealVector& x0,
                                  const std::vector<std::size_t>& support) {
    RecoveryMetrics m;
    m.rel_err_support = rel_err_support(x, x0, support);
    m.mse_support = mse_support(x, x0, support);
    m.output_snr = output_snr(x, support);
    m.support_recovered = support_recovered(x, support);
    return m;
}

}  // namespace nnsa
