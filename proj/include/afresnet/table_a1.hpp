#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace afresnet {

// One row of the published benchmark table: configuration, trainable
// parameter count, and the reported F1 median / std over five runs.
struct BenchmarkRow {
  int index;
  std::string_view config;
  std::int64_t n_params;
  double f1_median;
  double f1_std;
};

// All 30 rows in published order (28 grammar configs, then ResNet18/34).
std::span<const BenchmarkRow> benchmark_table();

}  // namespace afresnet
