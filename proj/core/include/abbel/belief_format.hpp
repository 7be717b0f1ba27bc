#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "abbel/env.hpp"
#include "abbel/posterior.hpp"

namespace abbel {

struct ParsedBelief {
  std::vector<CharSet> per_position;
  CharSet present_somewhere;
  CharSet absent;
  bool parse_ok = false;
};

// Canonical belief text for a projection:
//   Position 1: {3, 4, 5}
//   ...
//   In the lock: {0}
//   Not in the lock: {1, 2}
std::string render_canonical_belief(const PosteriorProjection& projection);

// Deterministic reading of a belief. Understands the canonical format and
// common prose forms:
//   "Position 1 can be '1' or '2'", "Positions 2,3 ∈ {0,3..9}"
//   "'2' is fixed in Position 2", "0 is not in Position 1"
//   "'0' must be in either Position 2 or Position 3"
//   "1,2 excluded", "'3' and '4' are not in the combination"
//   "The valid characters are now ['2', '5', '6']", "0 in the lock"
// Positions start out unconstrained and statements apply in order.
// parse_ok is false when no statement was understood.
ParsedBelief reference_parse(std::string_view belief_text, const EnvConfig& config);

}  // namespace abbel
