#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace sonicgrid {

/// 100 - min(t5, t4) / t1 * 100 over five trial times (seconds).
/// Negative when the last trials were slower than the first.
/// Throws InvalidInput unless there are exactly five times and t1, t4, t5 > 0.
double percent_improvement(std::span<const double> times);

/// means(n) ~ amplitude * exp(-n / decay) + offset for trials n = 1..N.
struct DecayFit {
  double amplitude = 0.0;
  double decay = 1.0;
  double offset = 0.0;
  double rss = 0.0;
  int iterations = 0;
  bool degenerate = false;
  bool converged = false;
  std::vector<double> rss_history;  // RSS after every accepted step, starting with the initial guess
};

double decay_model(double amplitude, double decay, double offset, double n);

/// Levenberg-damped Gauss-Newton from a = means[0] - means[N-1], b = 1,
/// c = means[N-1]; stops when the relative RSS change drops below 1e-10 or
/// after 200 iterations. Throws InvalidInput for fewer than 3 points.
DecayFit fit_exp_decay(std::span<const double> means);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point2&) const = default;
};

/// Per-axis zero mean, unit population variance. Throws InvalidInput for
/// fewer than two points or a constant axis.
std::vector<Point2> standardize(std::span<const Point2> points);

struct DbscanParams {
  double eps = 0.8;
  int min_neighbours = 5;
};

inline constexpr int kNoise = -1;

/// Core point: at least min_neighbours other points within eps (inclusive).
/// Clusters are connected components of core points, numbered from 0 in
/// order of their lowest point index; a border point joins the
/// lowest-numbered cluster among its core neighbours. Others get kNoise.
std::vector<int> dbscan(std::span<const Point2> points, const DbscanParams& params);

}  // namespace sonicgrid
