#include "fluxvm/bench/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <fmt/format.h>

#include "json.hpp"

#include "fluxvm/agent/agent.hpp"
#include "fluxvm/corpus.hpp"
#include "fluxvm/vm/exec_context.hpp"

namespace fluxvm::bench {

std::string_view configuration_name(Configuration c) noexcept {
  switch (c) {
    case Configuration::BaselineDirect: return "baseline-direct";
    case Configuration::Transformed: return "transformed";
    case Configuration::TransformedBefore: return "transformed+before";
    case Configuration::TransformedAfter: return "transformed+after";
    case Configuration::TransformedBoth: return "transformed+both";
  }
  return "?";
}

std::optional<Configuration> configuration_from_name(std::string_view s) noexcept {
  for (auto c : all_configurations())
    if (configuration_name(c) == s) return c;
  return std::nullopt;
}

const std::vector<Configuration>& all_configurations() {
  static const std::vector<Configuration> all{Configuration::BaselineDirect, Configuration::Transformed,
                                              Configuration::TransformedBefore, Configuration::TransformedAfter,
                                              Configuration::TransformedBoth};
  return all;
}

Quartiles quartiles(std::span<const double> samples) {
  if (samples.size() < 3) throw BenchError(fmt::format("quartiles need at least 3 samples, got {}", samples.size()));
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  auto rank = [&](double p) {
    auto r = static_cast<std::size_t>(std::ceil(p * static_cast<double>(s.size())));
    return s[std::clamp<std::size_t>(r, 1, s.size()) - 1];
  };
  return Quartiles{s.front(), rank(0.25), rank(0.5), rank(0.75), s.back()};
}

double overhead_percent(double baseline_median, double variant_median) {
  if (baseline_median <= 0) throw BenchError("baseline median must be positive");
  return (variant_median - baseline_median) / baseline_median * 100.0;
}

std::vector<QuartileRow> summarize(const std::vector<std::pair<std::string, std::vector<double>>>& samples) {
  std::vector<QuartileRow> rows;
  for (const auto& [label, s] : samples) {
    QuartileRow row{label, s, quartiles(s), std::nullopt};
    if (!rows.empty()) row.overhead_pct = overhead_percent(rows.front().q.median, row.q.median);
    rows.push_back(std::move(row));
  }
  return rows;
}

double rounded(double v, int decimals) {
  double scale = std::pow(10.0, decimals);
  return std::round(v * scale) / scale;
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

/// Loads `program` for configuration `c`, links it with a first warmup run,
/// installs the configuration's aspects, then finishes the warmups.
std::unique_ptr<RuntimeImage> prepare(const BenchConfig& cfg, Configuration c, const ModuleFile& program) {
  ImageOptions opts;
  opts.sink = [](std::string_view) {};
  auto image = std::make_unique<RuntimeImage>(opts);
  image->load(corpus_module(kAspectsModule), false);
  image->load(program, c != Configuration::BaselineDirect);
  std::vector<Value> args{Value::integer(cfg.n)};

  bool before = c == Configuration::TransformedBefore || c == Configuration::TransformedBoth;
  bool after = c == Configuration::TransformedAfter || c == Configuration::TransformedBoth;
  for (std::size_t w = 0; w < cfg.warmups; ++w) {
    run(*image, "main", args);
    if (w == 0) {
      Agent agent(*image);
      if (before) agent.apply_before_aspect("*", "Empty", "before");
      if (after) agent.apply_after_aspect("*", "Empty", "after");
    }
  }
  return image;
}

}  // namespace

BenchReport run_bench(const BenchConfig& cfg) {
  if (cfg.repetitions < 3) throw BenchError("at least 3 repetitions are required");
  if (cfg.warmups < 1) throw BenchError("at least one warmup run is required");
  if (cfg.configurations.empty()) throw BenchError("no configuration selected");
  if (!corpus_source(cfg.program)) throw BenchError(fmt::format("no corpus program named {}", cfg.program));
  auto program = corpus_module(cfg.program);

  BenchReport report;
  report.program = cfg.program;
  report.n = cfg.n;
  report.repetitions = cfg.repetitions;
  auto t0 = Clock::now();
  auto tr = transform_module(program);
  report.transform_ms = ms_since(t0);
  report.transform = tr.stats;

  std::vector<std::unique_ptr<RuntimeImage>> images;
  std::vector<std::pair<std::string, std::vector<double>>> samples;
  for (auto c : cfg.configurations) {
    images.push_back(prepare(cfg, c, program));
    samples.emplace_back(std::string(configuration_name(c)), std::vector<double>{});
  }
  // Repetitions are interleaved so that drift in machine speed is spread
  // evenly over the configurations.
  std::vector<Value> args{Value::integer(cfg.n)};
  for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
    for (std::size_t i = 0; i < images.size(); ++i) {
      auto t = Clock::now();
      run(*images[i], "main", args);
      samples[i].second.push_back(ms_since(t));
    }
  }
  report.rows = summarize(samples);
  return report;
}

std::string render_table(const BenchReport& r) {
  std::string out = fmt::format("program {} (n={}), {} repetitions, transform {:.3f} ms ({} classes, {} methods, {} sites)\n",
                                r.program, r.n, r.repetitions, rounded(r.transform_ms, 3), r.transform.classes_transformed,
                                r.transform.methods_transformed, r.transform.sites_rewritten);
  out += fmt::format("{:<20} {:>10} {:>10} {:>10} {:>10} {:>10} {:>9}\n", "configuration", "Q1-min", "Q2-25%",
                     "Q3-median", "Q4-75%", "Q5-max", "overhead");
  for (const auto& row : r.rows) {
    std::string overhead = row.overhead_pct ? fmt::format("{:+.1f}%", rounded(*row.overhead_pct, 1)) : "-";
    out += fmt::format("{:<20} {:>10.3f} {:>10.3f} {:>10.3f} {:>10.3f} {:>10.3f} {:>9}\n", row.label,
                       rounded(row.q.min, 3), rounded(row.q.q25, 3), rounded(row.q.median, 3), rounded(row.q.q75, 3),
                       rounded(row.q.max, 3), overhead);
  }
  return out;
}

std::string render_json(const BenchReport& r) {
  nlohmann::ordered_json j;
  j["program"] = r.program;
  j["n"] = r.n;
  j["repetitions"] = r.repetitions;
  j["transformMs"] = rounded(r.transform_ms, 3);
  j["transformStats"] = {{"classes", r.transform.classes_transformed},
                         {"methods", r.transform.methods_transformed},
                         {"sites", r.transform.sites_rewritten}};
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : r.rows) {
    nlohmann::ordered_json o;
    o["label"] = row.label;
    auto samples = nlohmann::ordered_json::array();
    for (double s : row.samples_ms) samples.push_back(rounded(s, 3));
    o["samplesMs"] = samples;
    o["q1Min"] = rounded(row.q.min, 3);
    o["q2P25"] = rounded(row.q.q25, 3);
    o["q3Median"] = rounded(row.q.median, 3);
    o["q4P75"] = rounded(row.q.q75, 3);
    o["q5Max"] = rounded(row.q.max, 3);
    o["overheadPct"] = row.overhead_pct ? nlohmann::ordered_json(rounded(*row.overhead_pct, 1)) : nlohmann::ordered_json();
    j["rows"].push_back(std::move(o));
  }
  return j.dump(2) + "\n";
}

}  // namespace fluxvm::bench
