#pragma once

#include <cstdint>

// Generated by tools/divergence_search.cpp. Do not edit by hand; rerun the
// search tool to refresh.

namespace etdlab {

inline constexpr char kDivergenceSpecJsonData[] = R"fixture({
  "states": 2,
  "actions": 2,
  "gamma": 0.90000000000000002,
  "transition": [
    [
      [1, 0],
      [1, 0]
    ],
    [
      [0, 1],
      [0, 1]
    ]
  ],
  "reward": [
    [0, -0.40000000000000002],
    [0, 0.099999999999999978]
  ],
  "initial_dist": [0.5, 0.5],
  "policies": {
    "behavior": [
      [0.40000000000000002, 0.59999999999999998],
      [0.40000000000000002, 0.59999999999999998]
    ],
    "target": [
      [0, 1],
      [0, 1]
    ]
  },
  "features": [
    [1],
    [2]
  ],
  "interest": [1, 1],
  "lambda": 0
}
)fixture";

inline constexpr std::uint64_t kDivergenceFixtureHashData = 0x78db793ce1dc11a6ull;
inline constexpr std::uint64_t kDivergenceSeedData = 9ull;

}  // namespace etdlab
