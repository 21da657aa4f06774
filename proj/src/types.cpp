#include "cav/types.hpp"

#include <cmath>

namespace cav {

std::optional<std::string> SystemParams::violated_invariant() const {
  auto finite = [](double x) { return std::isfinite(x); };
  if (!(finite(L) && finite(S) && finite(D) && finite(delta) && finite(v_min) &&
        finite(v_max) && finite(u_min) && finite(u_max) && finite(u_B) &&
        finite(K) && finite(fez_length)))
    return "all parameters finite";
  if (!(v_min > 0.0)) return "0 < v_min";
  if (!(v_min < v_max)) return "v_min < v_max";
  if (!(u_min < u_B)) return "u_min < u_B";
  if (!(u_B < 0.0)) return "u_B < 0";
  if (!(u_max > 0.0)) return "0 < u_max";
  if (!(S > 0.0)) return "0 < S";
  if (!(S < L)) return "S < L";
  if (!(delta > 0.0)) return "delta > 0";
  if (!(K > 0.0)) return "K > 0";
  if (!(fez_length > 0.0)) return "fez_length > 0";
  return std::nullopt;
}

void SystemParams::validate() const {
  if (auto bad = violated_invariant())
    throw ParameterError("invalid system parameters: requires " + *bad);
}

SystemParams reference_params() { return SystemParams{}; }

Road road_of(Heading h) {
  return (h == Heading::kEast || h == Heading::kWest) ? Road::kEastWest
                                                      : Road::kNorthSouth;
}

std::string_view to_string(Heading h) {
  switch (h) {
    case Heading::kEast: return "E";
    case Heading::kWest: return "W";
    case Heading::kNorth: return "N";
    case Heading::kSouth: return "S";
  }
  return "?";
}

std::optional<Heading> heading_from_string(std::string_view s) {
  if (s == "E") return Heading::kEast;
  if (s == "W") return Heading::kWest;
  if (s == "N") return Heading::kNorth;
  if (s == "S") return Heading::kSouth;
  return std::nullopt;
}

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::kFez: return "FEZ";
    case Phase::kCz: return "CZ";
    case Phase::kMz: return "MZ";
    case Phase::kPostMz: return "POST_MZ";
    case Phase::kExited: return "EXITED";
  }
  return "?";
}

std::string_view to_string(SubsetLabel l) {
  switch (l) {
    case SubsetLabel::kR: return "R";
    case SubsetLabel::kL: return "L";
    case SubsetLabel::kC: return "C";
    case SubsetLabel::kO: return "O";
  }
  return "?";
}

}  // namespace cav
