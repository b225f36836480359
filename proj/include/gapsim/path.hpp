#pragma once

#include <cstdint>
#include <vector>

namespace gapsim {

struct SeedInfo {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
};

// Values of one realization on the uniform grid origin + i * spacing.
struct PathSample {
  double origin = 0.0;
  double spacing = 1.0;
  std::vector<double> values;
  SeedInfo seed_info;

  double x(std::size_t i) const { return origin + static_cast<double>(i) * spacing; }
  double end() const { return x(values.empty() ? 0 : values.size() - 1); }
};

}  // namespace gapsim
