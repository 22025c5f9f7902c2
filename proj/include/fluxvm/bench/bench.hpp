#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fluxvm/error.hpp"
#include "fluxvm/transformer/transformer.hpp"

namespace fluxvm::bench {

class BenchError : public Error {
 public:
  using Error::Error;
};

enum class Configuration { BaselineDirect, Transformed, TransformedBefore, TransformedAfter, TransformedBoth };

std::string_view configuration_name(Configuration c) noexcept;
std::optional<Configuration> configuration_from_name(std::string_view s) noexcept;
const std::vector<Configuration>& all_configurations();

struct BenchConfig {
  std::string program = "classicfibo";
  std::vector<Configuration> configurations = all_configurations();
  std::size_t repetitions = 10;
  std::size_t warmups = 2;
  std::int64_t n = 25;
};

/// Five-number summary, nearest-rank: the p-quantile is the sample of rank
/// ceil(p * count) in ascending order.
struct Quartiles {
  double min = 0, q25 = 0, median = 0, q75 = 0, max = 0;
};

Quartiles quartiles(std::span<const double> samples);

/// (variant - baseline) / baseline * 100
double overhead_percent(double baseline_median, double variant_median);

struct QuartileRow {
  std::string label;
  std::vector<double> samples_ms;
  Quartiles q;
  std::optional<double> overhead_pct;  // empty for the baseline row
};

/// Builds rows from per-configuration samples; the first entry is the
/// baseline every other row is compared against.
std::vector<QuartileRow> summarize(const std::vector<std::pair<std::string, std::vector<double>>>& samples);

struct BenchReport {
  std::string program;
  std::int64_t n = 0;
  std::size_t repetitions = 0;
  double transform_ms = 0;
  TransformStats transform;
  std::vector<QuartileRow> rows;
};

BenchReport run_bench(const BenchConfig& cfg);

/// Rounds to the precision used by both renderings.
double rounded(double v, int decimals);

std::string render_table(const BenchReport& r);
std::string render_json(const BenchReport& r);

}  // namespace fluxvm::bench
