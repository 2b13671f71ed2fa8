#ifndef PHASEGN_SRC_TRACE_RECORDER_HPP
#define PHASEGN_SRC_TRACE_RECORDER_HPP

#include <chrono>

#include "phasegn/solver.hpp"

namespace phasegn::detail {

class TraceRecorder {
 public:
  TraceRecorder() : start_(std::chrono::steady_clock::now()) {}

  void record(SolveTrace& trace, Signal x, double rel_error, double residual,
              unsigned flags) const {
    const std::chrono::duration<double> elapsed =
        std::chrono::steady_clock::now() - start_;
    trace.iterates.push_back(std::move(x));
    trace.rel_errors.push_back(rel_error);
    trace.residuals.push_back(residual);
    trace.wall_times.push_back(elapsed.count());
    trace.flags.push_back(flags);
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace phasegn::detail

#endif  // PHASEGN_SRC_TRACE_RECORDER_HPP
