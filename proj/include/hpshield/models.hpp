#pragma once

#include <string_view>

namespace hpshield::models {

// Stop-sign car: a car at position x with velocity v approaching a stop sign at
// m. It may brake with force b or, when the guard allows, accelerate with A;
// control decisions happen at most every eps seconds.
inline constexpr std::string_view kStopSignInit = "v^2 <= 2*b*(m-x) & v >= 0 & A >= 0 & b > 0";
inline constexpr std::string_view kStopSignController =
    "a := -b; ++ ?(2*b*(m-x) >= v^2+(A+b)*(A*eps^2+2*eps*v)); a := A;";
inline constexpr std::string_view kStopSignAccelGuard = "2*b*(m-x) >= v^2+(A+b)*(A*eps^2+2*eps*v)";
inline constexpr std::string_view kStopSignPlant = "t := 0; {x'=v, v'=a, t'=1 & v>=0 & t<=eps}";
inline constexpr std::string_view kStopSignOde = "{x'=v, v'=a, t'=1 & v>=0 & t<=eps}";
inline constexpr std::string_view kStopSignProgram =
    "{{a := -b; ++ ?(2*b*(m-x) >= v^2+(A+b)*(A*eps^2+2*eps*v)); a := A;}; t := 0; "
    "{x'=v, v'=a, t'=1 & v>=0 & t<=eps}}*";
inline constexpr std::string_view kStopSignSafe = "x <= m";

/// Same model with the reaction-time term dropped from the acceleration guard.
inline constexpr std::string_view kStopSignNoReactionProgram =
    "{{a := -b; ++ ?(2*b*(m-x) >= v^2); a := A;}; t := 0; "
    "{x'=v, v'=a, t'=1 & v>=0 & t<=eps}}*";

}  // namespace hpshield::models
