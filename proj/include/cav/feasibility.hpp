#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cav/optctrl.hpp"
#include "cav/poly.hpp"
#include "cav/scheduler.hpp"
#include "cav/types.hpp"

namespace cav {

enum class GapPhase : std::uint8_t { kCz, kMz };

/// One polynomial piece of the rear-end gap s(t) = p_k(t) - p_i(t):
///   s(t) = A x^3 + B x^2 + C x + D,  x = t - t_ref,  t in [t_lo, t_hi].
/// t_ref is the follower's CZ entry time for every piece of a pair, so the
/// pieces share one local clock. `absolute()` re-expands to x = t.
struct GapPiece {
  double A = 0.0, B = 0.0, C = 0.0, D = 0.0;
  double t_ref = 0.0;
  double t_lo = 0.0, t_hi = 0.0;
  GapPhase phase = GapPhase::kCz;

  double operator()(double t) const;
  double rate(double t) const;          // v_k - v_i
  double acceleration(double t) const;  // u_k - u_i
  poly::Cubic local() const { return {A, B, C, D}; }
  /// Same piece with t_ref = 0, i.e. coefficients in absolute time.
  GapPiece absolute() const;
};

enum class GapCase : std::uint8_t {
  kAtTau,       // minimum at the follower's CZ entry
  kAtTkm,       // minimum where the leader enters the MZ
  kInteriorCz,  // stationary point while both are in their CZ
  kInteriorMz,  // stationary point while the leader cruises
  kAtTim,       // minimum at the follower's MZ entry
};

std::string_view to_string(GapCase c);

struct GapMinimum {
  double s_star = 0.0;
  double t_star = 0.0;
  GapCase case_tag = GapCase::kAtTau;
};

/// Gap pieces over the follower's CZ horizon. The first piece runs while the
/// leader is still on its cubic, the second once it cruises at v_k^m from
/// t_k^m on. Throws EmptyOverlap if the follower reaches the MZ before the
/// leader entered the CZ, and std::invalid_argument if follower.t0 < leader.t0.
std::vector<GapPiece> gap_pieces(const OptimalProfile& leader,
                                 const OptimalProfile& follower);

/// Global minimum over contiguous pieces. Candidates are the piece endpoints
/// and the stationary points with non-negative curvature inside each piece.
/// Ties resolve to the earliest time.
GapMinimum min_gap(const std::vector<GapPiece>& pieces);

/// Maximal sub-intervals of the pieces' span on which s(t) < level.
std::vector<std::pair<double, double>> intervals_below(
    const std::vector<GapPiece>& pieces, double level);

/// Smallest t >= leader.t0 with p_k(t) = delta.
double t_k_delta(const OptimalProfile& leader, double delta);

/// What the follower knows when choosing its CZ entry (tau, upsilon). When the
/// leader is not the FIFO predecessor its exit also bounds the follower's
/// schedule (see assign()).
struct FeasibilityContext {
  std::optional<OptimalProfile> leader;             // physically-ahead vehicle k
  std::optional<ScheduleAssignment> predecessor;    // FIFO predecessor i-1
  std::optional<SubsetLabel> label;                 // relation of i-1 to i
  SystemParams params;
};

/// Builds a context whose leader k is also the FIFO predecessor (label L),
/// with k's MZ exit at tm + S/vm.
FeasibilityContext same_lane_context(double tk0, double vk0, double tkm,
                                     double vkm, const SystemParams& params);

/// Gaps within this of delta count as delta. The L-case schedule puts the
/// terminal gap at exactly delta, so a strict comparison flips on rounding.
inline constexpr double kGapTolerance = 1e-9;

struct FeasibilityVerdict {
  enum class Status { kFeasible, kInfeasible, kConstrainedUnsupported, kError };

  /// s_star >= delta - kGapTolerance on the unconstrained optimal trajectories.
  bool gap_ok = false;
  /// Either trajectory leaves the speed/control box, so the unconstrained
  /// analysis does not describe the true optimal solution.
  bool constrained = false;
  std::optional<GapMinimum> minimum;
  std::optional<ScheduleAssignment> schedule;  // follower's induced schedule
  std::optional<OptimalProfile> profile;       // follower's CZ trajectory
  std::string reason;                          // set for kError

  Status status() const;
};

std::string_view to_string(FeasibilityVerdict::Status s);

/// Evaluates the CZ entry (tau, upsilon): derives the follower's schedule from
/// the context, solves its optimal trajectory and minimises the gap to k.
/// Degenerate horizons and schedule errors become kError verdicts.
FeasibilityVerdict is_feasible(double tau, double upsilon,
                               const FeasibilityContext& ctx);

struct GridOptions {
  bool mask_constrained = false;  // NaN for constrained cells
};

struct FeasibilityGrid {
  std::vector<double> tau;      // n_tau nodes
  std::vector<double> upsilon;  // n_upsilon nodes
  // Row-major over (upsilon, tau): value(iu, it) = s_star[iu * n_tau + it].
  std::vector<double> s_star;
  std::vector<FeasibilityVerdict::Status> status;
  std::vector<std::vector<std::pair<double, double>>> boundary;  // (tau, upsilon)
  std::size_t constrained_cells = 0;
  std::size_t error_cells = 0;
  double delta = 0.0;

  double value(std::size_t iu, std::size_t it) const {
    return s_star[iu * tau.size() + it];
  }
  /// s_star >= delta at the node (unbounded when there is no leader).
  bool feasible(std::size_t iu, std::size_t it) const;
};

/// Dense evaluation of s_star on a tau x upsilon lattice plus the delta level
/// set. Boundary points start from linear interpolation along cell edges and
/// are polished with bisection on the edge.
FeasibilityGrid feasibility_grid(const FeasibilityContext& ctx, double tau_lo,
                                 double tau_hi, double upsilon_lo,
                                 double upsilon_hi, std::size_t n_tau,
                                 std::size_t n_upsilon, GridOptions options = {});

}  // namespace cav
