#include "promptcal/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "promptcal/errors.hpp"

namespace promptcal::oracle {

namespace {

struct Rows {
  std::size_t k = 0;
  std::vector<std::vector<double>> p;
  std::vector<int> labels;
};

Rows load_rows(std::span<const ProbabilityRecord> records, bool need_labels) {
  Rows rows;
  for (const auto& r : records) {
    if (r.is_null_probe) continue;
    if (need_labels && !r.label) {
      throw Error(ErrorCode::UnlabelledRecord,
                  "record '" + r.example_id + "' has no label");
    }
    std::vector<double> p(r.word_probs.size());
    double sum = 0.0;
    for (std::size_t c = 0; c < p.size(); ++c) {
      p[c] = r.word_probs[c] < kProbabilityFloor ? kProbabilityFloor
                                                 : r.word_probs[c];
      sum += p[c];
    }
    for (double& v : p) v /= sum;
    if (rows.p.empty()) rows.k = p.size();
    if (p.size() != rows.k) {
      throw Error(ErrorCode::InvalidArgument, "inconsistent class count");
    }
    rows.p.push_back(std::move(p));
    rows.labels.push_back(r.label.value_or(-1));
  }
  if (rows.p.empty()) throw Error(ErrorCode::EmptyDataset, "no scored records");
  if (rows.k != 2 && rows.k != 3) {
    throw Error(ErrorCode::InvalidArgument, "oracle supports K = 2 or 3 only");
  }
  return rows;
}

// Marginal class distribution for log-weights (first entry implicitly 0).
std::vector<double> marginal(const Rows& rows, std::span<const double> logw) {
  std::vector<double> w(rows.k, 1.0);
  for (std::size_t c = 1; c < rows.k; ++c) w[c] = std::exp(logw[c - 1]);
  std::vector<double> m(rows.k, 0.0);
  for (const auto& p : rows.p) {
    double z = 0.0;
    for (std::size_t c = 0; c < rows.k; ++c) z += w[c] * p[c];
    for (std::size_t c = 0; c < rows.k; ++c) m[c] += w[c] * p[c] / z;
  }
  for (double& v : m) v /= static_cast<double>(rows.p.size());
  return m;
}

double gap(const Rows& rows, std::span<const double> logw,
           const TargetPrior& prior) {
  const auto m = marginal(rows, logw);
  double g = 0.0;
  for (std::size_t c = 0; c < rows.k; ++c) g += std::abs(m[c] - prior[c]);
  return g;
}

// Root of an increasing function on [lo, hi]; returns the clamped end when
// the bracket holds no sign change.
double bisect_increasing(const std::function<double(double)>& f, double lo,
                         double hi, double width) {
  if (f(lo) >= 0.0) return lo;
  if (f(hi) <= 0.0) return hi;
  while (hi - lo > width) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Widens [center - step, center + step] by doubling until f changes sign or
// the range limit is reached.
std::pair<double, double> local_bracket(const std::function<double(double)>& f,
                                        double center, double step,
                                        double limit) {
  double half = step;
  while (true) {
    const double lo = std::max(center - half, -limit);
    const double hi = std::min(center + half, limit);
    if ((f(lo) <= 0.0 && f(hi) >= 0.0) || (lo == -limit && hi == limit)) {
      return {lo, hi};
    }
    half *= 2.0;
  }
}

std::vector<double> grid_axis(double limit, double step) {
  const auto half = static_cast<long>(std::llround(limit / step));
  std::vector<double> axis;
  axis.reserve(2 * half + 1);
  for (long i = -half; i <= half; ++i) axis.push_back(static_cast<double>(i) * step);
  return axis;
}

constexpr double kLogRange = 10.0;
constexpr double kBisectWidth = 1e-9;
constexpr double kInnerLimit = 40.0;

}  // namespace

WeightVector brute_force_prior_match(std::span<const ProbabilityRecord> records,
                                     const TargetPrior& prior,
                                     double grid_step) {
  const Rows rows = load_rows(records, false);
  if (prior.size() != rows.k) {
    throw Error(ErrorCode::InvalidArgument, "prior length mismatch");
  }
  const auto axis = grid_axis(kLogRange, grid_step);

  if (rows.k == 2) {
    double best_a = 0.0;
    double best_gap = std::numeric_limits<double>::infinity();
    for (double a : axis) {
      const double g = gap(rows, std::span<const double>(&a, 1), prior);
      if (g < best_gap) {
        best_gap = g;
        best_a = a;
      }
    }
    auto excess = [&](double a) {
      return marginal(rows, std::span<const double>(&a, 1))[1] - prior[1];
    };
    const auto [lo, hi] = local_bracket(excess, best_a, grid_step, kLogRange);
    const double a = bisect_increasing(excess, lo, hi, kBisectWidth);
    const double logs[] = {0.0, a};
    return WeightVector::from_log(logs);
  }

  double best_a2 = 0.0;
  double best_gap = std::numeric_limits<double>::infinity();
  for (double a1 : axis) {
    for (double a2 : axis) {
      const double logw[] = {a1, a2};
      const double g = gap(rows, logw, prior);
      if (g < best_gap) {
        best_gap = g;
        best_a2 = a2;
      }
    }
  }

  // For fixed log-weight a2, the class-1 marginal increases with a1; solve it
  // onto the prior. The class-2 marginal along that curve increases with a2.
  auto solve_a1 = [&](double a2) {
    auto excess1 = [&](double a1) {
      const double logw[] = {a1, a2};
      return marginal(rows, logw)[1] - prior[1];
    };
    return bisect_increasing(excess1, -kInnerLimit, kInnerLimit, kBisectWidth);
  };
  auto excess2 = [&](double a2) {
    const double logw[] = {solve_a1(a2), a2};
    return marginal(rows, logw)[2] - prior[2];
  };
  const auto [lo, hi] = local_bracket(excess2, best_a2, grid_step, kLogRange);
  const double a2 = bisect_increasing(excess2, lo, hi, kBisectWidth);
  const double logs[] = {0.0, solve_a1(a2), a2};
  return WeightVector::from_log(logs);
}

OptimalOracleResult brute_force_optimal(
    std::span<const ProbabilityRecord> records, double grid_step) {
  const Rows rows = load_rows(records, true);

  auto count = [&](std::span<const double> w) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < rows.p.size(); ++i) {
      std::size_t arg = 0;
      for (std::size_t c = 1; c < rows.k; ++c) {
        if (w[c] * rows.p[i][c] > w[arg] * rows.p[i][arg]) arg = c;
      }
      if (static_cast<int>(arg) == rows.labels[i]) ++correct;
    }
    return correct;
  };

  std::vector<double> best_w(rows.k, 1.0);
  std::size_t best_correct = count(best_w);
  double best_norm = 0.0;
  std::size_t candidates = 1;
  auto consider = [&](const std::vector<double>& w) {
    ++candidates;
    const std::size_t c = count(w);
    double norm = 0.0;
    for (double v : w) norm += std::log(v) * std::log(v);
    norm = std::sqrt(norm);
    if (c > best_correct || (c == best_correct && norm < best_norm)) {
      best_correct = c;
      best_norm = norm;
      best_w = w;
    }
  };

  if (rows.k == 2) {
    std::vector<double> thresholds;
    for (const auto& p : rows.p) thresholds.push_back(p[0] / p[1]);
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                     thresholds.end());
    consider({1.0, thresholds.front() / 2.0});
    consider({1.0, thresholds.back() * 2.0});
    for (std::size_t i = 0; i + 1 < thresholds.size(); ++i) {
      consider({1.0, 0.5 * (thresholds[i] + thresholds[i + 1])});
    }
  } else {
    for (double a1 : grid_axis(6.0, grid_step)) {
      for (double a2 : grid_axis(6.0, grid_step)) {
        consider({1.0, std::exp(a1), std::exp(a2)});
      }
    }
  }

  return {WeightVector::canonical(best_w), best_correct,
          static_cast<double>(best_correct) /
              static_cast<double>(rows.p.size()),
          candidates};
}

}  // namespace promptcal::oracle
