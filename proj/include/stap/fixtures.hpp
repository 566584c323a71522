#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "stap/core.hpp"

namespace stap {

// One cell of the fusion truth table as realized by the fixture traces.
// Window w encodes: bit 0 temporal flag, bits 1-4 key-object subset (in
// KeyObjectClass order), bit 5 requested gate. The gate can only be realized
// when both a person and a firearm are present; otherwise the firearm is
// drawn edge-touching the person (or alone) and the gate stays false.
struct FusionCell {
  std::int64_t window = 0;
  bool temporal_flag = false;
  AnomalyClass temporal_class = AnomalyClass::Normal;
  std::set<KeyObjectClass> objects;
  bool gate = false;
};

inline constexpr std::int64_t kFusionCells = 64;
inline constexpr int kFusionFrameSide = 16;

FusionCell fusion_cell(std::int64_t window);

struct FixtureSet {
  std::vector<std::filesystem::path> files;
};

// Writes the deterministic fixture set. Same seed, same bytes.
FixtureSet write_fixtures(const std::filesystem::path& dir, std::uint64_t seed = 0);

}  // namespace stap
