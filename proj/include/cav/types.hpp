#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cav {

// Errors raised by the library. Each failure mode has its own type so callers
// can tell a bad configuration apart from a numerically degenerate request.
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct DuplicateRegistration : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnsupportedRoute : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ScheduleInfeasible : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateHorizon : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct OutOfDomain : std::out_of_range {
  using std::out_of_range::out_of_range;
};
struct EmptyOverlap : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidManeuver : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CannotGuarantee : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Geometry, kinematic bounds and cost weight shared by every vehicle.
struct SystemParams {
  double L = 400.0;       // CZ length [m]
  double S = 30.0;        // MZ side [m]
  double D = 1000.0;      // inter-intersection spacing [m]
  double delta = 10.0;    // minimal safe distance [m]
  double v_min = 7.0;     // [m/s]
  double v_max = 15.0;    // [m/s]
  double u_min = -5.0;    // [m/s^2]
  double u_max = 3.0;     // [m/s^2]
  double u_B = -2.0;      // FEZ deceleration bound [m/s^2]
  double K = 1.0;
  double fez_length = 44.0;  // [m]

  /// Name of the first violated invariant, or nullopt when all hold.
  std::optional<std::string> violated_invariant() const;
  /// Throws ParameterError naming the violated invariant.
  void validate() const;
};

/// Parameters used in the reference simulation study (one lane per approach).
SystemParams reference_params();

enum class Heading : std::uint8_t { kEast, kWest, kNorth, kSouth };

enum class Road : std::uint8_t { kEastWest, kNorthSouth };

Road road_of(Heading h);
std::string_view to_string(Heading h);
std::optional<Heading> heading_from_string(std::string_view s);

/// An approach lane: travel heading plus lane number counted from the median.
struct Lane {
  Heading heading = Heading::kEast;
  int number = 0;

  friend bool operator==(const Lane&, const Lane&) = default;
};

enum class Phase : std::uint8_t { kFez, kCz, kMz, kPostMz, kExited };

std::string_view to_string(Phase p);

/// Relation of the FIFO predecessor i-1 to vehicle i.
enum class SubsetLabel : std::uint8_t { kR, kL, kC, kO };

std::string_view to_string(SubsetLabel l);

using VehicleId = std::uint32_t;

struct Vehicle {
  VehicleId id = 0;
  int intersection = 1;
  Lane lane;
  Heading route = Heading::kEast;  // exit heading; straight-through only
  Phase phase = Phase::kFez;
  std::optional<double> t_F;
  std::optional<double> t0;
  std::optional<double> tm;
  std::optional<double> tf;
  double p = 0.0;
  double v = 0.0;
  double u = 0.0;
};

}  // namespace cav
