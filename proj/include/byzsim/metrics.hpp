#pragma once

#include <cstdio>
#include <string>
#include <vector>

namespace byzsim {

// One cadence tick of a run. Column order in the CSV matches field order.
// wall_clock_ms is written as 0 in the CSV so identical seeds give
// byte-identical files; real timings live in the sidecar JSON.
struct MetricRecord {
  int round = 0;
  double loss = 0.0;
  double grad_norm_sq = 0.0;
  double aggregation_error = 0.0;  // ||aggregate - mean of good messages||^2
  double suboptimality = 0.0;      // f(x_t) - f*
  int attack_active = 0;           // corrupted messages this round (C_t-style)
  double wall_clock_ms = 0.0;
};

inline const char* metric_csv_header() {
  return "round,loss,grad_norm_sq,aggregation_error,suboptimality,"
         "attack_active,wall_clock_ms";
}

inline std::string metric_csv_row(const MetricRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%d,%.17g",
                r.round, r.loss, r.grad_norm_sq, r.aggregation_error,
                r.suboptimality, r.attack_active, 0.0);
  return buf;
}

}  // namespace byzsim
