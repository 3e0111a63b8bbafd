#pragma once

// Exhaustive baseline oracle: every gain point simulated from scratch with
// the per-call run_switch, flags computed here, winner chosen by a plain scan.

#include <algorithm>
#include <vector>

#include "pidrl/baseline.hpp"

namespace oracle {

struct PointScore {
  pidrl::AxisGains gains;
  double train_mean = 0.0;
  double test_mean = 0.0;
  bool os_ok = true;
  bool settled = true;
  bool consistent = false;
  bool viable = false;
};

inline PointScore score_point(const pidrl::AxisGains& g,
                              const std::vector<pidrl::ActuatorParams>& train,
                              const std::vector<pidrl::ActuatorParams>& test,
                              const pidrl::SearchSetup& setup) {
  const auto events = pidrl::extreme_events(setup.plane);
  const pidrl::PidGains shared{g, g};
  PointScore s;
  s.gains = g;
  const auto mean_over = [&](const std::vector<pidrl::ActuatorParams>& fleet, bool is_train) {
    double sum = 0.0;
    int n = 0;
    for (const auto& a : fleet) {
      for (const auto& e : events) {
        const pidrl::Trace t =
            pidrl::run_switch(a, setup.temperature_c, shared, e, setup.duration_ms, setup.loop);
        const pidrl::SwitchMetrics m = pidrl::measure_switch(t, setup.reward.margin_mm);
        sum += m.st_x ? *m.st_x : setup.duration_ms;
        sum += m.st_y ? *m.st_y : setup.duration_ms;
        n += 2;
        if (is_train) {
          if (m.os_x > setup.reward.l_os_mm || m.os_y > setup.reward.l_os_mm) s.os_ok = false;
          if (!m.st_x || !m.st_y) s.settled = false;
        }
      }
    }
    return sum / n;
  };
  s.train_mean = mean_over(train, true);
  s.test_mean = mean_over(test, false);
  s.consistent = std::abs(s.test_mean - s.train_mean) <= setup.consistency_tolerance * s.train_mean;
  s.viable = s.os_ok && s.settled && s.consistent;
  return s;
}

/// True when `a` should win over `b`.
inline bool beats(const PointScore& a, const PointScore& b) {
  const bool flags_a[] = {a.viable, a.os_ok, a.settled, a.consistent};
  const bool flags_b[] = {b.viable, b.os_ok, b.settled, b.consistent};
  for (int k = 0; k < 4; ++k)
    if (flags_a[k] != flags_b[k]) return flags_a[k];
  if (a.train_mean != b.train_mean) return a.train_mean < b.train_mean;
  if (a.test_mean != b.test_mean) return a.test_mean < b.test_mean;
  if (a.gains.p != b.gains.p) return a.gains.p < b.gains.p;
  if (a.gains.i != b.gains.i) return a.gains.i < b.gains.i;
  return a.gains.d < b.gains.d;
}

inline std::size_t exhaustive_best(const std::vector<PointScore>& scores) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < scores.size(); ++k)
    if (beats(scores[k], scores[best])) best = k;
  return best;
}

}  // namespace oracle
