#ifndef PHASEGN_BENCH_HPP
#define PHASEGN_BENCH_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "phasegn/baselines.hpp"
#include "phasegn/init.hpp"
#include "phasegn/solver.hpp"

namespace phasegn::bench {

enum class Experiment { InitBench, Converge, Timing, Success };

std::string_view to_string(Experiment experiment);
Experiment parse_experiment(std::string_view name);

/// start:stop:step, inclusive of stop. A bare number is a one-point grid.
struct GridSpec {
  double start = 5.0;
  double stop = 5.0;
  double step = 1.0;

  static GridSpec parse(std::string_view text);
  std::vector<double> values() const;
  std::string str() const;
};

inline constexpr double kSuccessThreshold = 1e-5;

struct ExperimentConfig {
  Experiment experiment = Experiment::Success;
  Index n = 128;
  GridSpec m_over_n;
  int trials = 50;
  double noise_sigma = 0.0;
  Field signal_field = Field::Real;
  Field ensemble_field = Field::Complex;
  std::uint64_t seed = 7;
  std::vector<std::string> methods;
  std::filesystem::path out_dir = "results";
  bool emit_svg = false;
  int threads = 0;  // 0: one per hardware thread
  double success_threshold = kSuccessThreshold;
  bool threshold_overridden = false;

  GNConfig gn;
  BaselineConfig baseline;
  InitConfig init;

  /// The paper-scale settings of each experiment.
  static ExperimentConfig defaults(Experiment experiment);
  void validate() const;
};

struct ResultRow {
  std::string experiment;
  std::string method;
  Index n = 0;
  Index m = 0;
  std::optional<std::uint64_t> seed;  // empty on summary rows
  std::optional<int> step;            // iteration index for trace rows
  std::string metric;
  double value = 0.0;
  std::optional<double> wall_ms;
};

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

struct Chart {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  std::vector<Series> series;
};

struct ExperimentOutput {
  std::vector<ResultRow> rows;
  std::optional<Chart> chart;
};

ExperimentOutput run_init_bench(const ExperimentConfig& config);
ExperimentOutput run_converge(const ExperimentConfig& config);
ExperimentOutput run_timing(const ExperimentConfig& config);
ExperimentOutput run_success(const ExperimentConfig& config);
ExperimentOutput run_experiment(const ExperimentConfig& config);

/// Orders rows by (method, m, seed, step, metric); summary rows sort after
/// the per-trial rows of the same (method, m).
void sort_rows(std::vector<ResultRow>& rows);

/// experiment,method,n,m,seed,step,metric,value (RFC 4180).
void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows);
/// experiment,method,n,m,seed,step,metric,wall_ms for rows that carry a time.
void write_wall_csv(std::ostream& out, const std::vector<ResultRow>& rows);

std::string csv_escape(std::string_view field);
std::string format_number(double value);

/// Standalone SVG line chart on a fixed 800x600 view box.
std::string render_svg(const Chart& chart);

struct WrittenFiles {
  std::filesystem::path results;
  std::filesystem::path wall_times;
  std::optional<std::filesystem::path> svg;
  std::filesystem::path manifest;
};

/// Writes <experiment>.csv, <experiment>_wall.csv, optional <experiment>.svg
/// and manifest.json into config.out_dir.
WrittenFiles write_outputs(const ExperimentConfig& config,
                           const ExperimentOutput& output,
                           double wall_seconds);

}  // namespace phasegn::bench

#endif  // PHASEGN_BENCH_HPP
