#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "nnsa/matrix.hpp"

namespace nnsa {

enum class DataModel : std::uint8_t { Rect, Gaussian };

[[nodiscard]] const char* to_string(DataModel model) noexcept;

/// Parameters of one synthetic problem family. Nonzero signal entries are
/// always uniform on [0, sqrt(12)] (mean sqrt(3), variance 1). Matrix entries
/// are uniform on [0, sqrt(12)] for the rect model and N(5, 1) for the
/// Gaussian model; mu_a/var_a are the pre-normalization moments.
struct DataModelSpec {
    DataModel kind = DataModel::Rect;
    std::size_t m = 0;  ///< measurements (rows)
    std::size_t n = 0;  ///< signal length (columns)
    std::size_t s = 0;  ///< sparsity, 1 <= s <= n
    double input_snr_db = 40.0;
    double mu_a = 0.0;
    double var_a = 0.0;

    static constexpr double kMuX = 1.7320508075688772;  // sqrt(3)
    static constexpr double kVarX = 1.0;

    static DataModelSpec rect(std::size_t m, std::size_t n, std::size_t s, double input_snr_db);
    static DataModelSpec gaussian(std::size_t m, std::size_t n, std::size_t s, double input_snr_db);
};

/// One drawn problem instance. The matrix is column-normalized; y = y0 + eta.
struct Instance {
    RealMatrix a;
    RealVector x0;
    std::vector<std::size_t> support;  ///< ascending, |support| == s
    RealVector y0;
    RealVector eta;
    RealVector y;
    std::uint64_t seed = 0;
    std::size_t negative_matrix_entries = 0;  ///< pre-normalization draws below zero
};

/// Closed-form input SNR (linear) of the data model at a given noise
/// variance:
///   (s / (M * var_eta)) * (var_x + mu_x^2 * (s*mu_a^2 + var_a) / (mu_a^2 + var_a)).
[[nodiscard]] double input_snr_theoretical(const DataModelSpec& spec, double noise_var);

/// Noise variance that hits spec.input_snr_db exactly (inverse of the above).
[[nodiscard]] double noise_var_for_snr(const DataModelSpec& spec);

/// Half-width of the zero-mean uniform noise support for the rect model:
/// gamma = sqrt(3) * sigma_eta.
[[nodiscard]] double rect_noise_halfwidth(double noise_var);

/// Draws support, signal, matrix and noise; support uniform without
/// replacement, all draws mutually independent, bit-reproducible given
/// (spec, seed) regardless of platform or thread count.
[[nodiscard]] Instance generate(const DataModelSpec& spec, std::uint64_t seed);

/// Zeroes the floor(ratio * M * N) smallest entries by value (ties broken by
/// row-major index). ratio must lie in [0, 0.9].
[[nodiscard]] RealMatrix prune(const RealMatrix& a, double ratio);

/// Flat CSV fixture dump: rows `field,i,j,value`. Load inverts it exactly.
void write_instance_csv(std::ostream& os, const Instance& inst);
[[nodiscard]] Instance read_instance_csv(std::istream& is);

}  // namespace nnsa
