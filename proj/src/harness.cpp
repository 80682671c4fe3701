#include "qroutesim/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>

namespace qroutesim {

namespace {

// Runs fn(0..count-1) across a small thread pool. Tasks must not share
// mutable state except their own result slot.
void parallel_run(std::size_t count, const std::function<void(std::size_t)>& fn) {
  if (count == 0) return;
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers = std::min<std::size_t>(hw, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (!failed.load(std::memory_order_relaxed)) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) break;
        try {
          fn(i);
        } catch (...) {
          std::scoped_lock lock(error_mutex);
          if (!error) error = std::current_exception();
          failed.store(true, std::memory_order_relaxed);
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<const CurvePoint*> non_gap_points(const LearningCurve& curve) {
  std::vector<const CurvePoint*> points;
  points.reserve(curve.points.size());
  for (const CurvePoint& p : curve.points) {
    if (!p.is_gap()) points.push_back(&p);
  }
  return points;
}

double mean_of(const std::vector<const CurvePoint*>& points, std::size_t begin,
               std::size_t end) {
  double sum = 0.0;
  for (std::size_t i = begin; i < end; ++i) sum += points[i]->avg;
  return sum / static_cast<double>(end - begin);
}

}  // namespace

void ExperimentSpec::validate() const {
  base.validate();
  if (seeds.empty()) {
    throw std::invalid_argument("experiment needs at least one seed");
  }
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw std::invalid_argument("experiment seeds must be distinct");
  }
  if (policies.empty()) {
    throw std::invalid_argument("experiment needs at least one policy");
  }
}

LearningCurve aggregate_curves(const std::vector<LearningCurve>& curves) {
  if (curves.empty()) {
    throw std::invalid_argument("nothing to aggregate");
  }
  const LearningCurve& first = curves.front();
  for (const LearningCurve& c : curves) {
    if (c.window != first.window || c.points.size() != first.points.size()) {
      throw std::invalid_argument("curves do not share a step grid");
    }
    for (std::size_t i = 0; i < c.points.size(); ++i) {
      if (c.points[i].step != first.points[i].step) {
        throw std::invalid_argument("curves do not share a step grid");
      }
    }
  }
  LearningCurve out;
  out.window = first.window;
  out.points.reserve(first.points.size());
  for (std::size_t i = 0; i < first.points.size(); ++i) {
    CurvePoint point;
    point.step = first.points[i].step;
    point.delivered = 0;
    double sum = 0.0;
    int contributing = 0;
    for (const LearningCurve& c : curves) {
      point.delivered += c.points[i].delivered;
      if (!c.points[i].is_gap()) {
        sum += c.points[i].avg;
        ++contributing;
      }
    }
    point.avg = contributing > 0 ? sum / contributing
                                 : std::numeric_limits<double>::quiet_NaN();
    out.points.push_back(point);
  }
  return out;
}

ComparisonResult run_comparison(const ExperimentSpec& spec) {
  spec.validate();
  ComparisonResult result;
  result.policies = spec.policies;
  result.seeds = spec.seeds;
  result.per_seed.assign(spec.policies.size(),
                         std::vector<LearningCurve>(spec.seeds.size()));

  const std::size_t per_policy = spec.seeds.size();
  parallel_run(spec.policies.size() * per_policy, [&](std::size_t i) {
    const std::size_t p = i / per_policy;
    const std::size_t s = i % per_policy;
    SimConfig config = spec.base;
    config.policy = spec.policies[p];
    config.seed = spec.seeds[s];
    result.per_seed[p][s] = run(config).curve;
  });

  result.aggregated.reserve(spec.policies.size());
  for (const auto& curves : result.per_seed) {
    result.aggregated.push_back(aggregate_curves(curves));
  }
  return result;
}

std::optional<double> steady_state_mean(const std::vector<DeliveryRecord>& records,
                                        std::int64_t steps) {
  const std::int64_t region_start = steps - steps / 5;
  double sum = 0.0;
  std::int64_t count = 0;
  for (const DeliveryRecord& r : records) {
    if (r.delivered_at - 1 >= region_start) {
      sum += static_cast<double>(r.delivery_time);
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

std::vector<SweepRow> run_load_sweep(const std::vector<PolicyKind>& policies,
                                     const std::vector<double>& loads,
                                     const ExperimentSpec& spec) {
  spec.validate();
  if (policies.empty() || loads.empty()) {
    throw std::invalid_argument("sweep needs at least one policy and one load");
  }
  for (const double load : loads) {
    if (!(load > 0.0)) {
      throw std::invalid_argument("sweep loads must be positive");
    }
  }

  const std::size_t cells = policies.size() * loads.size();
  const std::size_t seed_count = spec.seeds.size();
  std::vector<std::optional<double>> seed_means(cells * seed_count);

  parallel_run(cells * seed_count, [&](std::size_t i) {
    const std::size_t cell = i / seed_count;
    const std::size_t s = i % seed_count;
    SimConfig config = spec.base;
    config.policy = policies[cell / loads.size()];
    config.load = loads[cell % loads.size()];
    config.seed = spec.seeds[s];
    const RunResult result = run(config);
    seed_means[i] = steady_state_mean(result.deliveries, config.steps);
  });

  std::vector<SweepRow> rows;
  rows.reserve(cells);
  for (std::size_t cell = 0; cell < cells; ++cell) {
    SweepRow row;
    row.policy = policies[cell / loads.size()];
    row.load = loads[cell % loads.size()];
    double sum = 0.0;
    std::vector<double> means;
    for (std::size_t s = 0; s < seed_count; ++s) {
      if (seed_means[cell * seed_count + s]) {
        means.push_back(*seed_means[cell * seed_count + s]);
        sum += means.back();
      }
    }
    row.seed_count = static_cast<int>(means.size());
    if (means.empty()) {
      row.mean = std::numeric_limits<double>::quiet_NaN();
      row.stderr_ = std::numeric_limits<double>::quiet_NaN();
    } else {
      row.mean = sum / static_cast<double>(means.size());
      double sq = 0.0;
      for (const double m : means) sq += (m - row.mean) * (m - row.mean);
      row.stderr_ = means.size() > 1
                        ? std::sqrt(sq / (means.size() - 1)) /
                              std::sqrt(static_cast<double>(means.size()))
                        : 0.0;
    }
    rows.push_back(row);
  }
  return rows;
}

std::optional<std::int64_t> settling_step(const LearningCurve& curve,
                                          double fraction) {
  if (!(fraction >= 0.0)) {
    throw std::invalid_argument("settling fraction must be non-negative");
  }
  const auto points = non_gap_points(curve);
  if (points.empty()) return std::nullopt;

  const double target = points.back()->avg;
  const double bound = (1.0 + fraction) * target;

  // A curve still climbing into its end has no plateau to settle at:
  // compare the last fifth of the windows against the fifth before it.
  const std::size_t n = points.size();
  const std::size_t fifth = (n + 4) / 5;
  if (n >= 2 * fifth && fifth > 0) {
    const double tail = mean_of(points, n - fifth, n);
    const double prev = mean_of(points, n - 2 * fifth, n - fifth);
    if (tail > (1.0 + fraction) * prev) return std::nullopt;
  }

  std::size_t first_ok = n;  // index of earliest all-compliant suffix
  for (std::size_t i = n; i-- > 0;) {
    if (points[i]->avg <= bound) {
      first_ok = i;
    } else {
      break;
    }
  }
  if (first_ok == n) return std::nullopt;  // only possible for negative targets
  return points[first_ok]->step;
}

}  // namespace qroutesim
