#include "poakit/detect.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace poakit {

Detection apply_threshold(const ScoreSeries& scores, double tau) {
  require(std::isfinite(tau), "threshold must be finite");
  scores.validate();
  Detection d;
  d.threshold = tau;
  d.flags.assign(scores.scores.size(), 0);
  d.lead_times.assign(scores.scores.size(), std::nullopt);
  for (std::size_t i = 0; i < scores.scores.size(); ++i) {
    if (scores.scores[i] && *scores.scores[i] >= tau) {
      d.flags[i] = 1;
      d.lead_times[i] = scores.lead_times[i];
    }
  }
  return d;
}

std::vector<double> default_grid(const ScoreSeries& scores, std::size_t n) {
  require(n >= 1, "grid size must be >= 1");
  std::vector<double> values = scores.defined();
  require(!values.empty(), "no defined scores to build a threshold grid from");
  std::sort(values.begin(), values.end());
  std::vector<double> grid;
  grid.reserve(n);
  const double last = static_cast<double>(values.size() - 1);
  for (std::size_t j = 0; j < n; ++j) {
    const double q = n == 1 ? 0.5 : static_cast<double>(j) / static_cast<double>(n - 1);
    const double pos = q * last;
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    grid.push_back(values[lo] + frac * (values[hi] - values[lo]));
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

ThresholdChoice best_f1_threshold(const ScoreSeries& scores, std::span<const double> grid, const F1Callback& metric,
                                  unsigned jobs) {
  require(!grid.empty(), "threshold grid is empty");
  std::vector<std::optional<double>> f1(grid.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t g = begin; g < end; ++g) f1[g] = metric(apply_threshold(scores, grid[g]));
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(grid.size())));
  if (jobs == 1) {
    work(0, grid.size());
  } else {
    std::vector<std::exception_ptr> errors(jobs);
    {
      std::vector<std::jthread> pool;
      const std::size_t chunk = (grid.size() + jobs - 1) / jobs;
      for (unsigned j = 0; j < jobs; ++j) {
        const std::size_t begin = std::min(grid.size(), j * chunk);
        const std::size_t end = std::min(grid.size(), begin + chunk);
        pool.emplace_back([&, j, begin, end] {
          try {
            work(begin, end);
          } catch (...) {
            errors[j] = std::current_exception();
          }
        });
      }
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  ThresholdChoice best;
  bool any = false;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (!f1[g]) continue;
    if (!any || *f1[g] > best.f1 || (*f1[g] == best.f1 && grid[g] > best.threshold)) {
      best.threshold = grid[g];
      best.f1 = *f1[g];
      any = true;
    }
  }
  if (!any) {
    best.threshold = *std::max_element(grid.begin(), grid.end());
    best.f1 = 0.0;
    best.undefined = true;
  }
  return best;
}

SegmentSet split_precursor_prediction(std::span<const std::uint8_t> flags, std::span<const Segment> anomalies,
                                      Index delta) {
  std::vector<Segment> sorted(anomalies.begin(), anomalies.end());
  std::sort(sorted.begin(), sorted.end(), [](const Segment& a, const Segment& b) { return a.start < b.start; });
  std::vector<Segment> predictions;
  std::vector<std::optional<Segment>> precursors;
  for (const Segment& run : segments_from_flags(flags)) {
    auto onset = std::find_if(sorted.begin(), sorted.end(),
                              [&](const Segment& a) { return a.start >= run.start && a.start <= run.end(); });
    if (onset != sorted.end() && onset->start > run.start) {
      precursors.push_back(Segment{run.start, onset->start - run.start});
      predictions.push_back(Segment{onset->start, run.end() - onset->start + 1});
    } else {
      precursors.emplace_back();
      predictions.push_back(run);
    }
  }
  return make_segment_set(std::move(sorted), std::move(predictions), std::move(precursors), delta,
                          static_cast<Index>(flags.size()));
}

}  // namespace poakit
