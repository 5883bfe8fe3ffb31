#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nnsa/datagen.hpp"
#include "nnsa/dynsys.hpp"
#include "nnsa/metrics.hpp"

namespace nnsa {

enum class Study : std::uint8_t {
    OlfactorySnrSweep,
    PruningSweep,
    SparseApproxComparison,
    SparsitySweep,
    ModelComparison,
};

[[nodiscard]] const char* to_string(Study study) noexcept;
[[nodiscard]] std::optional<Study> study_from_name(std::string_view name) noexcept;

struct SolverConfig {
    double kkt_tol = 1e-8;
    double max_time = 1e7;
    std::size_t max_steps = 4'000'000;
    IntegratorKind integrator = IntegratorKind::ProjectedEuler;
    double prox_tol = 1e-8;
    std::size_t prox_max_iters = 50000;
    std::size_t n_alphas = 50;
};

/// One Monte-Carlo sweep, fully determined by its fields plus master_seed.
struct ExperimentConfig {
    Study study = Study::OlfactorySnrSweep;
    DataModel model = DataModel::Rect;
    std::size_t m = 50;
    std::size_t n = 50;
    std::size_t s = 5;
    std::size_t n_instances = 200;
    std::uint64_t master_seed = 1;
    SolverConfig solver;
    std::vector<double> snr_db_list = {40.0};
    std::vector<std::size_t> s_list;       ///< empty selects {s}
    std::vector<std::size_t> m_list;       ///< empty selects {m}
    std::vector<double> prune_ratios;      ///< empty selects 0..0.9 in steps of 0.1
    std::string out_dir;                   ///< empty: no CSV files written
    std::size_t threads = 0;               ///< 0 selects hardware concurrency
    bool emit_timings = false;             ///< adds a wall_ms column (not byte-stable)
};

struct SweepPoint {
    DataModel model = DataModel::Rect;
    std::size_t m = 0, n = 0, s = 0;
    double snr_db = 0.0;
    double prune_ratio = 0.0;
};

/// One row of the per-instance table.
struct McRecord {
    SweepPoint point;
    std::size_t instance = 0;
    std::uint64_t seed = 0;
    const char* solver = "";
    bool converged = false;
    double kkt_total = 0.0;
    std::uint64_t switches = 0;
    std::uint64_t steps = 0;
    RecoveryMetrics metrics;
    double best_alpha = 0.0;  ///< NaN for the dynamical solver
    double wall_ms = 0.0;
};

struct AggregateRow {
    SweepPoint point;
    const char* solver = "";
    std::size_t n = 0;
    std::size_t n_converged = 0;
    double mean_rel_err_support = 0.0, se_rel_err_support = 0.0;
    double mean_mse_support = 0.0, se_mse_support = 0.0;
    double mean_output_snr = 0.0, se_output_snr = 0.0;  ///< linear units
    double mean_output_snr_db = 0.0;                    ///< dB of the linear mean
    std::size_t output_snr_excluded = 0;                ///< non-finite sentinels
    double support_recovery_fraction = 0.0;
    double mean_switches = 0.0;
    double mean_kkt_total = 0.0;
};

struct StudyResult {
    std::vector<McRecord> records;
    std::vector<AggregateRow> aggregates;
    std::size_t failed_rows = 0;
    std::size_t negative_matrix_entries = 0;  ///< pre-normalization draws below zero (Gaussian model)
    std::vector<std::string> output_files;
};

/// Thrown when more than 10% of the instance solves fail.
class StudyAbortedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr const char* kSolverDyn = "dyn_nnls";
inline constexpr const char* kSolverNnbpdn = "nnbpdn_best_alpha";

/// Sub-seed for one instance; a pure function of the master seed, the
/// data-generating coordinates (pruning ratio excluded) and the index, so
/// pruning sweeps reuse the instances of the matching unpruned point.
[[nodiscard]] std::uint64_t instance_seed(std::uint64_t master_seed, const SweepPoint& point,
                                          std::size_t instance) noexcept;

/// Dynamical solves per (SNR, sparsity) point on square systems; reports
/// relative error on the support and output SNR.
[[nodiscard]] StudyResult run_olfactory(const ExperimentConfig& cfg);

/// Same instances re-solved after pruning the matrix at each ratio.
[[nodiscard]] StudyResult run_pruning(const ExperimentConfig& cfg);

/// Dynamical NNLS against the regularization path with oracle best-alpha
/// selection (smallest full-vector MSE versus the true signal). Drives the
/// SparseApproxComparison, SparsitySweep and ModelComparison studies.
[[nodiscard]] StudyResult run_sparse_comparison(const ExperimentConfig& cfg);

[[nodiscard]] StudyResult run_study(const ExperimentConfig& cfg);

[[nodiscard]] std::vector<AggregateRow> aggregate_records(const std::vector<McRecord>& records);

void write_records_csv(std::ostream& os, Study study, const std::vector<McRecord>& records,
                       bool with_timings);
void write_aggregates_csv(std::ostream& os, Study study, const std::vector<AggregateRow>& rows);

/// Index-sharded parallel map; each index writes only its own slots, so
/// results are identical for any thread count.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& fn);

/// Flag/config-file driven entry point. Exit codes: 0 success, 2 bad flags
/// or configuration, 3 unreadable config file, 4 unwritable output path,
/// 5 aborted (too many failed instances).
[[nodiscard]] int cli_main(int argc, const char* const* argv);

}  // namespace nnsa
