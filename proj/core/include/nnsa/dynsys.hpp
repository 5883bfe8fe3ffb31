#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "nnsa/matrix.hpp"

namespace nnsa {

/// Band around a bound inside which a state counts as sitting on the bound.
/// Clamping always writes the bound value exactly, so in practice the band is
/// only entered from outside, never drifted into.
inline constexpr double kZeroTol = 1e-12;

/// Membership of one coordinate in the switching partition.
enum class SetLabel : std::uint8_t { Positive, Zero, Negative };

[[nodiscard]] const char* to_string(SetLabel label) noexcept;

/// Disjoint classification of all state indices: strictly positive states
/// (plus zero states with non-negative integrator input), states pinned at
/// zero by a negative integrator input, and negative states recovering at
/// the constant rate xi.
struct IndexPartition {
    std::vector<std::size_t> plus;
    std::vector<std::size_t> zero;
    std::vector<std::size_t> neg;

    friend bool operator==(const IndexPartition&, const IndexPartition&) = default;
};

[[nodiscard]] SetLabel classify_coordinate(double x, double xtilde) noexcept;
[[nodiscard]] IndexPartition make_partition(const RealVector& x, const RealVector& xtilde);

/// The switched linear system: integrators limited to non-negative outputs,
/// driven by xtilde = A^T u - A^T A x. With constant input u the equilibria
/// are exactly the optimal points of min 0.5*||A x - u||^2 s.t. x >= 0.
struct DiscSystem {
    RealMatrix a;        ///< M x N system matrix
    RealMatrix gram_a;   ///< cached A^T A
    RealVector input;    ///< constant input u, length M
    RealVector atb;      ///< cached A^T u
    double xi = 1.0;     ///< recovery rate for negative states, must be > 0

    /// Computes and caches A^T A and A^T u. Throws std::invalid_argument on
    /// dimension mismatch or xi <= 0.
    static DiscSystem build(RealMatrix a, RealVector input, double xi = 1.0);

    [[nodiscard]] std::size_t state_dim() const noexcept { return a.cols(); }
};

struct SystemState {
    double t = 0.0;
    RealVector x;
    RealVector xtilde;  ///< A^T u - A^T A x at time t
    IndexPartition partition;
};

/// Builds a consistent state (xtilde and partition derived from x).
[[nodiscard]] SystemState make_state(const DiscSystem& sys, double t, RealVector x);

/// One coordinate moving between partition sets.
struct SwitchEvent {
    double t = 0.0;
    std::size_t index = 0;
    SetLabel from = SetLabel::Positive;
    SetLabel to = SetLabel::Positive;
};

struct Trajectory {
    std::vector<SystemState> samples;               ///< strictly increasing times
    std::vector<SwitchEvent> switch_events;
    std::vector<std::pair<double, double>> lyapunov;  ///< (t, V) when a reference is set
};

enum class IntegratorKind : std::uint8_t { ProjectedEuler, ExactSubsystem };

struct SolverOptions {
    double kkt_tol = 1e-8;      ///< convergence threshold on the KKT residual
    double max_time = 1e7;      ///< simulated-time budget (time is cheap once the partition settles)
    double min_time = 0.0;      ///< do not declare convergence before this time
    double dt = 0.0;            ///< Euler step; 0 selects 1/(2 * Gershgorin bound on A^T A)
    /// While the partition is unchanged, grow the step to the stability
    /// limit of the block that is actually moving; the step resets on every
    /// transition. Only active when dt is automatic.
    bool adaptive_dt = true;
    std::size_t max_steps = 4'000'000;
    std::size_t check_interval = 32;   ///< steps between convergence checks
    std::size_t record_interval = 0;   ///< steps between recorded samples; 0 = endpoints only
    bool record_states = true;         ///< set false to record only (t, V) pairs
    IntegratorKind integrator = IntegratorKind::ProjectedEuler;
    std::optional<RealVector> lyapunov_reference;  ///< equilibrium for V = 0.5*||x - ref||^2
};

struct SolveResult {
    RealVector x_eq;
    RealVector lambda_eq;       ///< A^T A x_eq - A^T u
    double kkt_residual = 0.0;
    std::size_t switches = 0;
    std::size_t steps = 0;
    bool converged = false;
    double sim_time = 0.0;      ///< simulated time at exit
    double wall_time_s = 0.0;
};

/// Thrown when a state or integrator input stops being finite.
class IntegrationDivergedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown by the exact integrator when the Gram block of the positive set is
/// not safely positive definite; callers should fall back to projected Euler.
class SingularSubsystemError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Switched right-hand side: xdot_i = xtilde_i on the positive set,
/// max(0, xtilde_i) at zero, and xi below zero.
[[nodiscard]] std::pair<RealVector, IndexPartition> integrator_rhs(const DiscSystem& sys,
                                                                   const RealVector& x);

/// One explicit Euler step with per-coordinate clamping: positive states that
/// would cross zero are set to exactly 0 at step end, pinned states stay 0,
/// and negative states advance by dt*xi and clamp at zero. xtilde and the
/// partition are recomputed at step end; transitions are appended to
/// `events` when given, with linearly interpolated crossing times.
[[nodiscard]] SystemState step_projected_euler(const DiscSystem& sys, const SystemState& state,
                                               double dt,
                                               std::vector<SwitchEvent>* events = nullptr);

/// Advances the exact piecewise solution to t_end. On every interval of
/// constant partition the positive block follows the closed-form flow of its
/// linear subsystem (via eigendecomposition of the Gram block), pinned states
/// stay zero, and negative states grow linearly at rate xi. The next
/// transition is located by root finding; the earliest one splits the
/// interval. Throws SingularSubsystemError when the positive-set Gram block
/// is not positive definite.
[[nodiscard]] std::pair<SystemState, std::vector<SwitchEvent>> step_exact_subsystem(
    const DiscSystem& sys, const SystemState& state, double t_end);

/// Integrates from x0 until the KKT residual of the associated NNLS problem
/// drops below opts.kkt_tol or the time/step budget runs out. Never throws on
/// non-convergence; the result carries converged = false instead.
[[nodiscard]] std::pair<SolveResult, Trajectory> solve(const DiscSystem& sys, const RealVector& x0,
                                                       const SolverOptions& opts = {});

/// V(x - x_eq) = 0.5 * ||x - x_eq||^2.
[[nodiscard]] double lyapunov_value(const RealVector& x, const RealVector& x_eq);

[[nodiscard]] std::size_t count_switches(const Trajectory& traj) noexcept;

/// Fixed-horizon projected-Euler run with sample recording (no convergence
/// test). record_interval == 0 is treated as 1.
[[nodiscard]] Trajectory simulate(const DiscSystem& sys, const RealVector& x0, double t_end,
                                  const SolverOptions& opts = {});

/// Columns t,x_1..x_N and optionally V when Lyapunov values were recorded.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

/// Columns t,index,from,to with 1-based indices.
void write_switch_events_csv(std::ostream& os, const Trajectory& traj);

}  // namespace nnsa
