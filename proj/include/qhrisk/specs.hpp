#pragma once

#include <string>
#include <string_view>

#include "qhrisk/distortion.hpp"
#include "qhrisk/distribution.hpp"
#include "qhrisk/risk.hpp"
#include "qhrisk/weights.hpp"

namespace qhrisk {

// Textual specs, as accepted by the command line and config files:
//
//   distortion  avatr:A | identity | ph:B | osm:A,P | expectile:A
//               | tab:T0/G0,T1/G1,...
//   risk        any distortion (as a distortion risk measure)
//               | sup:D1;D2;...          Kusuoka sup over distortions
//               | one_sided_moment:A,P   the moment-based measure
//               | expectile_measure:A    the expectile as a measure
//               | hg:ALPHA,Q             Haezendonck with psi(u) = u^Q
//   dist        uniform:A,B | exponential:R | pareto:K[,XM] | normal:M,S
//               | point:M | discrete:X@P,... | pwl:X/F,... | reflect:DIST
//   weight      phi:L | one
//   direction   bump:A,B,H | const:A,B,V | diff:DIST (the function G - F0)
//
// Every parser throws SpecError naming the offending token.

Distortion parse_distortion(std::string_view spec);
RiskEvaluator parse_risk(std::string_view spec);
Dist parse_dist(std::string_view spec);
WeightFn parse_weight(std::string_view spec);
Direction parse_direction(std::string_view spec, const Dist& F0);

}  // namespace qhrisk
