#include "phasegn/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>

#include "phasegn/measure.hpp"

#ifndef PHASEGN_VERSION
#define PHASEGN_VERSION "unknown"
#endif

namespace phasegn::bench {

std::string_view to_string(Experiment experiment) {
  switch (experiment) {
    case Experiment::InitBench:
      return "init-bench";
    case Experiment::Converge:
      return "converge";
    case Experiment::Timing:
      return "timing";
    case Experiment::Success:
      return "success";
  }
  return "?";
}

Experiment parse_experiment(std::string_view name) {
  if (name == "init-bench") return Experiment::InitBench;
  if (name == "converge") return Experiment::Converge;
  if (name == "timing") return Experiment::Timing;
  if (name == "success") return Experiment::Success;
  throw ConfigError("unknown experiment '" + std::string(name) + "'");
}

namespace {

double parse_double(std::string_view text) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("not a number: '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

GridSpec GridSpec::parse(std::string_view text) {
  std::vector<std::string_view> parts;
  std::size_t pos = 0;
  while (true) {
    const auto colon = text.find(':', pos);
    parts.push_back(text.substr(pos, colon - pos));
    if (colon == std::string_view::npos) break;
    pos = colon + 1;
  }
  GridSpec g;
  if (parts.size() == 1) {
    g.start = g.stop = parse_double(parts[0]);
    g.step = 1.0;
  } else if (parts.size() == 3) {
    g.start = parse_double(parts[0]);
    g.stop = parse_double(parts[1]);
    g.step = parse_double(parts[2]);
  } else {
    throw ConfigError("grid must be start:stop:step or a single value");
  }
  if (g.values().empty()) throw ConfigError("grid '" + std::string(text) + "' is empty");
  return g;
}

std::vector<double> GridSpec::values() const {
  std::vector<double> out;
  if (!(step > 0.0) || !(start > 0.0) || !std::isfinite(stop)) return out;
  for (int i = 0;; ++i) {
    const double v = start + i * step;
    if (v > stop + 1e-9 * step) break;
    out.push_back(v);
  }
  return out;
}

std::string GridSpec::str() const {
  return format_number(start) + ":" + format_number(stop) + ":" +
         format_number(step);
}

ExperimentConfig ExperimentConfig::defaults(Experiment experiment) {
  ExperimentConfig c;
  c.experiment = experiment;
  switch (experiment) {
    case Experiment::InitBench:
      c.m_over_n = {4.0, 22.0, 2.0};
      c.trials = 50;
      c.signal_field = Field::Complex;
      c.methods = {"exp", "si", "tsi", "ni"};
      break;
    case Experiment::Converge:
      c.m_over_n = {5.0, 5.0, 1.0};
      c.trials = 1;
      c.noise_sigma = 0.1;
      c.methods = {"gn", "wf", "altmin"};
      break;
    case Experiment::Timing:
      c.m_over_n = {5.0, 5.0, 1.0};
      c.trials = 10;
      c.methods = {"gn", "wf", "altmin"};
      break;
    case Experiment::Success:
      c.m_over_n = {1.0, 10.0, 0.5};
      c.trials = 100;
      c.methods = {"gn", "wf", "altmin"};
      break;
  }
  return c;
}

namespace {

bool is_solver(std::string_view name) {
  return name == "gn" || name == "wf" || name == "altmin";
}

}  // namespace

void ExperimentConfig::validate() const {
  if (n < 1) throw ConfigError("n must be >= 1");
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (m_over_n.values().empty()) throw ConfigError("m/n grid is empty");
  if (!(noise_sigma >= 0.0)) throw ConfigError("sigma must be >= 0");
  if (threads < 0) throw ConfigError("threads must be >= 0");
  if (!(success_threshold > 0.0)) throw ConfigError("threshold must be > 0");
  if (methods.empty()) throw ConfigError("method list is empty");
  if (ensemble_field == Field::Real && signal_field == Field::Complex) {
    throw FieldMismatch("complex signals need a complex ensemble");
  }
  for (const auto& m : methods) {
    if (experiment == Experiment::InitBench) {
      parse_init_method(m);
    } else if (!is_solver(m)) {
      throw ConfigError("unknown solver '" + m +
                        "' (expected gn, wf or altmin; taf is not provided)");
    }
  }
  for (double r : m_over_n.values()) {
    if (std::llround(r * static_cast<double>(n)) < 1) {
      throw ConfigError("m/n grid point gives m < 1");
    }
  }
}

namespace {

struct Problem {
  SensingEnsemble ensemble;
  Observations observations;
  Signal truth;
};

Index rows_for(const ExperimentConfig& c, double ratio) {
  return static_cast<Index>(std::llround(ratio * static_cast<double>(c.n)));
}

Problem make_problem(const ExperimentConfig& c, Index m, std::uint64_t seed) {
  SensingEnsemble e = sample_ensemble(m, c.n, c.ensemble_field, seed);
  Signal z = sample_signal(c.n, c.signal_field, seed);
  Observations y = observe(e, z, c.noise_sigma, seed);
  return {std::move(e), std::move(y), std::move(z)};
}

InitConfig init_config(const ExperimentConfig& c, InitMethod method,
                       std::uint64_t seed) {
  InitConfig ic = c.init;
  ic.method = method;
  ic.signal_field = c.signal_field;
  ic.power_seed = seed;
  return ic;
}

SolveTrace run_solver(const ExperimentConfig& c, std::string_view method,
                      const Problem& p, const Signal& x0) {
  if (method == "gn") {
    GNConfig g = c.gn;
    g.rel_err_tol = c.success_threshold;
    return solve_gn(p.ensemble, p.observations, x0, p.truth, g);
  }
  BaselineConfig b = c.baseline;
  b.rel_err_tol = c.success_threshold;
  if (method == "wf") return wf_solve(p.ensemble, p.observations, x0, p.truth, b);
  return altmin_solve(p.ensemble, p.observations, x0, p.truth, b);
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - since)
      .count();
}

// Runs work(i) for i in [0, count) on a bounded pool; rethrows the first
// failure after all workers have stopped.
template <typename Work>
void parallel_for(std::size_t count, int threads, Work&& work) {
  std::size_t workers = threads > 0
                            ? static_cast<std::size_t>(threads)
                            : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto loop = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        work(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
  };
  if (workers <= 1) {
    loop();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(loop);
  }
  if (failure) std::rethrow_exception(failure);
}

struct WorkItem {
  Index m;
  double ratio;
  std::uint64_t seed;
};

std::vector<WorkItem> work_items(const ExperimentConfig& c) {
  std::vector<WorkItem> items;
  for (double r : c.m_over_n.values()) {
    for (int t = 0; t < c.trials; ++t) {
      items.push_back({rows_for(c, r), r, c.seed + static_cast<std::uint64_t>(t)});
    }
  }
  return items;
}

template <typename Trial>
std::vector<ResultRow> run_trials(const ExperimentConfig& c, Trial&& trial) {
  const auto items = work_items(c);
  std::vector<std::vector<ResultRow>> per_item(items.size());
  parallel_for(items.size(), c.threads,
               [&](std::size_t i) { per_item[i] = trial(items[i]); });
  std::vector<ResultRow> rows;
  for (auto& chunk : per_item) {
    std::move(chunk.begin(), chunk.end(), std::back_inserter(rows));
  }
  return rows;
}

ResultRow make_row(const ExperimentConfig& c, std::string method, Index m,
                   std::optional<std::uint64_t> seed, std::string metric,
                   double value) {
  ResultRow r;
  r.experiment = std::string(to_string(c.experiment));
  r.method = std::move(method);
  r.n = c.n;
  r.m = m;
  r.seed = seed;
  r.metric = std::move(metric);
  r.value = value;
  return r;
}

// Per-(method, m) aggregate of one metric over trial rows.
template <typename Reduce>
std::vector<ResultRow> summarize(const ExperimentConfig& c,
                                 const std::vector<ResultRow>& rows,
                                 std::string_view metric,
                                 const std::string& summary_name,
                                 Reduce&& reduce) {
  std::map<std::pair<std::string, Index>, std::vector<double>> groups;
  for (const auto& r : rows) {
    if (r.seed && !r.step && r.metric == metric) {
      groups[{r.method, r.m}].push_back(r.value);
    }
  }
  std::vector<ResultRow> out;
  for (auto& [key, values] : groups) {
    out.push_back(make_row(c, key.first, key.second, std::nullopt, summary_name,
                           reduce(values)));
  }
  return out;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? std::nan("") : s / static_cast<double>(v.size());
}

double median(std::vector<double> v) {
  std::erase_if(v, [](double x) { return !std::isfinite(x); });
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

Chart summary_chart(const ExperimentConfig& c,
                    const std::vector<ResultRow>& summaries,
                    std::string_view metric, std::string title,
                    std::string y_label) {
  Chart chart;
  chart.title = std::move(title);
  chart.x_label = "m/n";
  chart.y_label = std::move(y_label);
  for (const auto& method : c.methods) {
    Series s{method, {}};
    for (const auto& r : summaries) {
      if (r.method == method && r.metric == metric) {
        s.points.emplace_back(static_cast<double>(r.m) / static_cast<double>(c.n),
                              r.value);
      }
    }
    std::sort(s.points.begin(), s.points.end());
    chart.series.push_back(std::move(s));
  }
  return chart;
}

void require_experiment(const ExperimentConfig& c, Experiment e) {
  if (c.experiment != e) {
    throw ConfigError("configuration is for experiment '" +
                      std::string(to_string(c.experiment)) + "', not '" +
                      std::string(to_string(e)) + "'");
  }
  c.validate();
}

}  // namespace

ExperimentOutput run_init_bench(const ExperimentConfig& c) {
  require_experiment(c, Experiment::InitBench);
  ExperimentOutput out;
  out.rows = run_trials(c, [&c](const WorkItem& item) {
    std::vector<ResultRow> rows;
    const Problem p = make_problem(c, item.m, item.seed);
    for (const auto& name : c.methods) {
      const auto t0 = std::chrono::steady_clock::now();
      try {
        const InitResult r = initialize(
            p.ensemble, p.observations,
            init_config(c, parse_init_method(name), item.seed));
        auto row = make_row(c, name, item.m, item.seed, "rel_err",
                            dist(r.x0, p.truth) / p.truth.norm());
        row.wall_ms = elapsed_ms(t0);
        rows.push_back(std::move(row));
      } catch (const Error&) {
        rows.push_back(make_row(c, name, item.m, item.seed, "aborted", 1.0));
      }
    }
    return rows;
  });
  auto summary = summarize(c, out.rows, "rel_err", "mean_rel_err", mean);
  out.chart = summary_chart(c, summary, "mean_rel_err",
                            "Initialization: mean relative error",
                            "mean dist(x0, z) / |z|");
  out.rows.insert(out.rows.end(), summary.begin(), summary.end());
  sort_rows(out.rows);
  return out;
}

namespace {

// Shared Alg.-1 start for the solver experiments.
std::optional<Signal> shared_start(const ExperimentConfig& c, const Problem& p,
                                   std::uint64_t seed) {
  try {
    return initialize(p.ensemble, p.observations,
                      init_config(c, InitMethod::ExpSpectral, seed))
        .x0;
  } catch (const Error&) {
    return std::nullopt;
  }
}

constexpr double kConvergeTolerance = 1e-15;
constexpr double kFloorBand = 1.05;

bool aborted(const SolveTrace& t) {
  return t.status == SolveStatus::StepFailed ||
         t.status == SolveStatus::Diverged;
}

}  // namespace

ExperimentOutput run_converge(const ExperimentConfig& c) {
  require_experiment(c, Experiment::Converge);
  // Curves run to their floor rather than stopping at the success threshold.
  ExperimentConfig run = c;
  run.success_threshold = kConvergeTolerance;
  ExperimentOutput out;
  out.rows = run_trials(c, [&c, &run](const WorkItem& item) {
    std::vector<ResultRow> rows;
    const Problem p = make_problem(c, item.m, item.seed);
    const auto x0 = shared_start(c, p, item.seed);
    std::vector<std::pair<std::string, std::vector<double>>> curves;
    for (const auto& name : c.methods) {
      if (!x0) {
        rows.push_back(make_row(c, name, item.m, item.seed, "aborted", 1.0));
        continue;
      }
      const SolveTrace trace = run_solver(run, name, p, *x0);
      for (std::size_t k = 0; k < trace.size(); ++k) {
        auto row = make_row(c, name, item.m, item.seed, "rel_err",
                            trace.rel_errors[k]);
        row.step = static_cast<int>(k);
        row.wall_ms = trace.wall_times[k] * 1e3;
        rows.push_back(std::move(row));
      }
      rows.push_back(make_row(c, name, item.m, item.seed, "final_rel_err",
                              trace.rel_errors.back()));
      if (aborted(trace)) {
        rows.push_back(make_row(c, name, item.m, item.seed, "aborted", 1.0));
      }
      curves.emplace_back(name, trace.rel_errors);
    }
    // Shared floor: the worst final error among the methods, with a 5% band.
    double floor = 0.0;
    for (const auto& [name, errs] : curves) floor = std::max(floor, errs.back());
    for (const auto& [name, errs] : curves) {
      double hit = std::nan("");
      for (std::size_t k = 0; k < errs.size(); ++k) {
        if (errs[k] <= kFloorBand * floor) {
          hit = static_cast<double>(k);
          break;
        }
      }
      rows.push_back(make_row(c, name, item.m, item.seed, "iters_to_floor", hit));
    }
    return rows;
  });
  auto summary =
      summarize(c, out.rows, "final_rel_err", "mean_final_rel_err", mean);

  // Curves of the first trial at the first grid point.
  Chart chart;
  chart.title = "Convergence: relative error vs iteration";
  chart.x_label = "iteration (log10)";
  chart.y_label = "relative error (log10)";
  chart.log_x = chart.log_y = true;
  const Index m0 = rows_for(c, c.m_over_n.values().front());
  for (const auto& method : c.methods) {
    Series s{method, {}};
    for (const auto& r : out.rows) {
      if (r.method == method && r.m == m0 && r.seed == c.seed && r.step &&
          *r.step >= 1) {
        s.points.emplace_back(*r.step, r.value);
      }
    }
    std::sort(s.points.begin(), s.points.end());
    chart.series.push_back(std::move(s));
  }
  out.chart = std::move(chart);
  auto floor_summary =
      summarize(c, out.rows, "iters_to_floor", "median_iters_to_floor",
                [](const std::vector<double>& v) { return median(v); });
  out.rows.insert(out.rows.end(), summary.begin(), summary.end());
  out.rows.insert(out.rows.end(), floor_summary.begin(), floor_summary.end());
  sort_rows(out.rows);
  return out;
}

ExperimentOutput run_timing(const ExperimentConfig& c) {
  require_experiment(c, Experiment::Timing);
  ExperimentOutput out;
  out.rows = run_trials(c, [&c](const WorkItem& item) {
    std::vector<ResultRow> rows;
    const Problem p = make_problem(c, item.m, item.seed);
    const auto x0 = shared_start(c, p, item.seed);
    for (const auto& name : c.methods) {
      if (!x0) {
        rows.push_back(make_row(c, name, item.m, item.seed, "aborted", 1.0));
        continue;
      }
      const SolveTrace trace = run_solver(c, name, p, *x0);
      rows.push_back(make_row(c, name, item.m, item.seed, "start_rel_err",
                              trace.rel_errors.front()));
      const auto hit = trace.first_below(c.success_threshold);
      auto iters = make_row(c, name, item.m, item.seed, "iterations",
                            hit ? static_cast<double>(*hit) : std::nan(""));
      iters.wall_ms =
          trace.wall_times[hit ? static_cast<std::size_t>(*hit) : trace.size() - 1] *
          1e3;
      rows.push_back(std::move(iters));
      rows.push_back(make_row(c, name, item.m, item.seed, "converged",
                              hit ? 1.0 : 0.0));
      if (aborted(trace)) {
        rows.push_back(make_row(c, name, item.m, item.seed, "aborted", 1.0));
      }
    }
    return rows;
  });
  auto med = summarize(c, out.rows, "iterations", "median_iterations",
                       [](const std::vector<double>& v) { return median(v); });
  auto rate = summarize(c, out.rows, "converged", "success_rate", mean);
  out.rows.insert(out.rows.end(), med.begin(), med.end());
  out.rows.insert(out.rows.end(), rate.begin(), rate.end());
  sort_rows(out.rows);
  return out;
}

ExperimentOutput run_success(const ExperimentConfig& c) {
  require_experiment(c, Experiment::Success);
  ExperimentOutput out;
  out.rows = run_trials(c, [&c](const WorkItem& item) {
    std::vector<ResultRow> rows;
    const Problem p = make_problem(c, item.m, item.seed);
    const auto x0 = shared_start(c, p, item.seed);
    for (const auto& name : c.methods) {
      double success = 0.0;
      if (x0) {
        const SolveTrace trace = run_solver(c, name, p, *x0);
        success = trace.rel_errors.back() < c.success_threshold ? 1.0 : 0.0;
      }
      rows.push_back(make_row(c, name, item.m, item.seed, "success", success));
    }
    return rows;
  });
  auto summary = summarize(c, out.rows, "success", "success_rate", mean);
  out.chart = summary_chart(c, summary, "success_rate",
                            "Success rate (relative error below threshold)",
                            "success rate");
  out.rows.insert(out.rows.end(), summary.begin(), summary.end());
  sort_rows(out.rows);
  return out;
}

ExperimentOutput run_experiment(const ExperimentConfig& c) {
  switch (c.experiment) {
    case Experiment::InitBench:
      return run_init_bench(c);
    case Experiment::Converge:
      return run_converge(c);
    case Experiment::Timing:
      return run_timing(c);
    case Experiment::Success:
      return run_success(c);
  }
  throw ConfigError("unknown experiment");
}

void sort_rows(std::vector<ResultRow>& rows) {
  auto key = [](const ResultRow& r) {
    return std::make_tuple(std::cref(r.method), r.m, !r.seed.has_value(),
                           r.seed.value_or(0), r.step.value_or(-1),
                           std::cref(r.metric));
  };
  std::stable_sort(rows.begin(), rows.end(),
                   [&](const ResultRow& a, const ResultRow& b) {
                     return key(a) < key(b);
                   });
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

namespace {

void write_key(std::ostream& out, const ResultRow& r) {
  out << csv_escape(r.experiment) << ',' << csv_escape(r.method) << ',' << r.n
      << ',' << r.m << ',';
  if (r.seed) out << *r.seed;
  out << ',';
  if (r.step) out << *r.step;
  out << ',' << csv_escape(r.metric) << ',';
}

}  // namespace

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << "experiment,method,n,m,seed,step,metric,value\r\n";
  for (const auto& r : rows) {
    write_key(out, r);
    out << format_number(r.value) << "\r\n";
  }
}

void write_wall_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << "experiment,method,n,m,seed,step,metric,wall_ms\r\n";
  for (const auto& r : rows) {
    if (!r.wall_ms) continue;
    write_key(out, r);
    out << format_number(*r.wall_ms) << "\r\n";
  }
}

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 600.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 640.0;
constexpr double kTop = 50.0;
constexpr double kBottom = 530.0;

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += ch;
    }
  }
  return out;
}

std::string fmt2(double v) {
  std::ostringstream s;
  s.precision(2);
  s << std::fixed << v;
  return s.str();
}

std::string tick_label(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  bool log = false;

  double transform(double v) const { return log ? std::log10(v) : v; }
};

Axis fit_axis(const Chart& chart, bool x_axis) {
  Axis axis;
  axis.log = x_axis ? chart.log_x : chart.log_y;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : chart.series) {
    for (const auto& [x, y] : s.points) {
      const double v = x_axis ? x : y;
      if (!std::isfinite(v) || (axis.log && v <= 0.0)) continue;
      lo = std::min(lo, axis.transform(v));
      hi = std::max(hi, axis.transform(v));
    }
  }
  if (!std::isfinite(lo)) {
    lo = 0.0;
    hi = 1.0;
  }
  if (axis.log) {
    lo = std::floor(lo);
    hi = std::ceil(hi);
  }
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  axis.lo = lo;
  axis.hi = hi;
  return axis;
}

}  // namespace

std::string render_svg(const Chart& chart) {
  static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                            "#ff7f0e", "#9467bd", "#8c564b"};
  const Axis ax = fit_axis(chart, true);
  const Axis ay = fit_axis(chart, false);
  auto px = [&](double v) {
    return kLeft + (ax.transform(v) - ax.lo) / (ax.hi - ax.lo) * (kRight - kLeft);
  };
  auto py = [&](double v) {
    return kBottom - (ay.transform(v) - ay.lo) / (ay.hi - ay.lo) * (kBottom - kTop);
  };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << kWidth
    << ' ' << kHeight << "\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << kWidth / 2 << "\" y=\"28\" text-anchor=\"middle\" "
    << "font-size=\"16\">" << xml_escape(chart.title) << "</text>\n";
  s << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\""
    << kRight - kLeft << "\" height=\"" << kBottom - kTop
    << "\" fill=\"none\" stroke=\"black\"/>\n";

  const int ticks = 5;
  for (int i = 0; i <= ticks; ++i) {
    const double fx = ax.lo + (ax.hi - ax.lo) * i / ticks;
    const double x = kLeft + (kRight - kLeft) * i / ticks;
    s << "<line x1=\"" << fmt2(x) << "\" y1=\"" << kBottom << "\" x2=\""
      << fmt2(x) << "\" y2=\"" << kBottom + 5 << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << fmt2(x) << "\" y=\"" << kBottom + 20
      << "\" text-anchor=\"middle\">" << tick_label(fx) << "</text>\n";
    const double fy = ay.lo + (ay.hi - ay.lo) * i / ticks;
    const double y = kBottom - (kBottom - kTop) * i / ticks;
    s << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << fmt2(y) << "\" x2=\""
      << kLeft << "\" y2=\"" << fmt2(y) << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << kLeft - 8 << "\" y=\"" << fmt2(y + 4)
      << "\" text-anchor=\"end\">" << tick_label(fy) << "</text>\n";
  }
  s << "<text x=\"" << (kLeft + kRight) / 2 << "\" y=\"" << kBottom + 45
    << "\" text-anchor=\"middle\">" << xml_escape(chart.x_label) << "</text>\n";
  s << "<text x=\"20\" y=\"" << (kTop + kBottom) / 2
    << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
    << (kTop + kBottom) / 2 << ")\">" << xml_escape(chart.y_label)
    << "</text>\n";

  for (std::size_t i = 0; i < chart.series.size(); ++i) {
    const auto& series = chart.series[i];
    const char* color = kColors[i % std::size(kColors)];
    s << "<polyline fill=\"none\" stroke=\"" << color
      << "\" stroke-width=\"2\" points=\"";
    bool first = true;
    for (const auto& [x, y] : series.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      if ((ax.log && x <= 0.0) || (ay.log && y <= 0.0)) continue;
      if (!first) s << ' ';
      s << fmt2(px(x)) << ',' << fmt2(py(y));
      first = false;
    }
    s << "\"/>\n";
    const double ly = kTop + 20.0 + 22.0 * static_cast<double>(i);
    s << "<line x1=\"" << kRight + 20 << "\" y1=\"" << ly << "\" x2=\""
      << kRight + 50 << "\" y2=\"" << ly << "\" stroke=\"" << color
      << "\" stroke-width=\"2\"/>\n";
    s << "<text x=\"" << kRight + 58 << "\" y=\"" << ly + 4 << "\">"
      << xml_escape(series.name) << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json config_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["experiment"] = to_string(c.experiment);
  j["n"] = c.n;
  j["m_over_n"] = c.m_over_n.str();
  j["trials"] = c.trials;
  j["sigma"] = c.noise_sigma;
  j["field"] = to_string(c.signal_field);
  j["ensemble_field"] = to_string(c.ensemble_field);
  j["seed"] = c.seed;
  j["methods"] = c.methods;
  j["out_dir"] = c.out_dir.string();
  j["svg"] = c.emit_svg;
  j["threads"] = c.threads;
  j["gn"] = {{"max_iters", c.gn.max_iters},
             {"residual_tol", c.gn.residual_tol}};
  j["baseline"] = {{"max_iters", c.baseline.max_iters},
                   {"wf_mu_max", c.baseline.wf_mu_max},
                   {"wf_tau0", c.baseline.wf_tau0}};
  j["init"] = {{"power_iters", c.init.power_iters},
               {"power_tol", c.init.power_tol},
               {"tsi_beta_y", c.init.tsi_beta_y},
               {"ni_fraction", c.init.ni_fraction}};
  return j;
}

}  // namespace

WrittenFiles write_outputs(const ExperimentConfig& c,
                           const ExperimentOutput& output,
                           double wall_seconds) {
  std::filesystem::create_directories(c.out_dir);
  const std::string stem(to_string(c.experiment));
  WrittenFiles files;
  files.results = c.out_dir / (stem + ".csv");
  files.wall_times = c.out_dir / (stem + "_wall.csv");
  files.manifest = c.out_dir / "manifest.json";
  {
    std::ofstream out(files.results, std::ios::binary);
    write_results_csv(out, output.rows);
    if (!out) throw Error("failed to write " + files.results.string());
  }
  {
    std::ofstream out(files.wall_times, std::ios::binary);
    write_wall_csv(out, output.rows);
  }
  if (c.emit_svg && output.chart) {
    files.svg = c.out_dir / (stem + ".svg");
    std::ofstream(*files.svg, std::ios::binary) << render_svg(*output.chart);
  }
  nlohmann::json manifest;
  manifest["config"] = config_json(c);
  manifest["code_version"] = PHASEGN_VERSION;
  manifest["finished_at_utc"] = utc_timestamp();
  manifest["wall_seconds"] = wall_seconds;
  manifest["success_threshold"] = c.success_threshold;
  manifest["success_threshold_overridden"] = c.threshold_overridden;
  manifest["not_provided"] = {"taf"};
  manifest["rows"] = output.rows.size();
  nlohmann::json outputs = {files.results.filename().string(),
                            files.wall_times.filename().string()};
  if (files.svg) outputs.push_back(files.svg->filename().string());
  manifest["outputs"] = outputs;
  std::ofstream(files.manifest) << manifest.dump(2) << '\n';
  return files;
}

}  // namespace phasegn::bench
