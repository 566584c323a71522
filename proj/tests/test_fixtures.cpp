#include "doctest.h"

#include "helpers.hpp"
#include "stap/fixtures.hpp"
#include "stap/spatial.hpp"

using namespace stap;

TEST_CASE("fixtures regenerate byte for byte") {
  const auto a = testing_util::scratch_dir("fixa");
  const auto b = testing_util::scratch_dir("fixb");
  const auto first = write_fixtures(a, 7);
  const auto second = write_fixtures(b, 7);
  REQUIRE(first.files.size() == second.files.size());
  CHECK(first.files.size() >= 10);
  for (std::size_t i = 0; i < first.files.size(); ++i) {
    CAPTURE(first.files[i]);
    CHECK(first.files[i].filename() == second.files[i].filename());
    CHECK(testing_util::read_file(first.files[i]) == testing_util::read_file(second.files[i]));
  }
  const auto c = testing_util::scratch_dir("fixc");
  write_fixtures(c, 8);
  CHECK(testing_util::read_file(a / "temporal_fusion.jsonl") != testing_util::read_file(c / "temporal_fusion.jsonl"));
  for (const auto& d : {a, b, c}) std::filesystem::remove_all(d);
}

TEST_CASE("fusion cells cover the table") {
  std::set<std::pair<unsigned, bool>> seen;
  bool lone_gun = false;
  for (std::int64_t w = 0; w < kFusionCells; ++w) {
    const auto cell = fusion_cell(w);
    CHECK(cell.temporal_flag == ((w & 1) != 0));
    CHECK(cell.temporal_flag == (cell.temporal_class != AnomalyClass::Normal));
    const bool both = cell.objects.count(KeyObjectClass::Person) && cell.objects.count(KeyObjectClass::Firearm);
    if (cell.gate) CHECK(both);
    if (cell.objects == std::set<KeyObjectClass>{KeyObjectClass::Firearm}) lone_gun = true;
    unsigned bits = 0;
    for (std::size_t k = 0; k < kNumKeyObjectClasses; ++k) bits |= cell.objects.count(kAllKeyObjectClasses[k]) << k;
    seen.insert({bits, cell.gate});
  }
  CHECK(lone_gun);
  // 16 subsets; the 4 subsets holding person and firearm appear with both gate values.
  CHECK(seen.size() == 20);
}

TEST_CASE("red fixture trace holds a flame") {
  const auto dir = testing_util::scratch_dir("fixred");
  write_fixtures(dir);
  TraceSpatialBackend trace(dir / "spatial_red.jsonl");
  bool flame = false;
  for (const auto& [frame, dets] : trace.entries()) {
    for (const auto& d : dets) flame = flame || d.object_class == KeyObjectClass::Flame;
  }
  CHECK(flame);
  CHECK(std::filesystem::exists(dir / "fusion.ini"));
  CHECK(std::filesystem::exists(dir / "truth_fusion.csv"));
  std::filesystem::remove_all(dir);
}
