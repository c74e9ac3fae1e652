#include "sonicgrid/analytics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <string>

#include "sonicgrid/error.hpp"

namespace sonicgrid {

double percent_improvement(std::span<const double> times) {
  if (times.size() != 5) throw InvalidInput("improvement needs five trial times, got " + std::to_string(times.size()));
  const double t1 = times[0], t4 = times[3], t5 = times[4];
  if (!(t1 > 0.0 && t4 > 0.0 && t5 > 0.0)) throw InvalidInput("trial times must be positive");
  return 100.0 - std::min(t5, t4) / t1 * 100.0;
}

double decay_model(double amplitude, double decay, double offset, double n) {
  return amplitude * std::exp(-n / decay) + offset;
}

namespace {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<Vec3, 3>;

double rss_of(std::span<const double> y, const Vec3& p) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = y[i] - decay_model(p[0], p[1], p[2], static_cast<double>(i + 1));
    s += r * r;
  }
  return s;
}

/// Gaussian elimination with partial pivoting; false when singular.
bool solve3(Mat3 a, Vec3 b, Vec3& x) {
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    }
    if (std::abs(a[piv][col]) < 1e-300) return false;
    std::swap(a[col], a[piv]);
    std::swap(b[col], b[piv]);
    for (int r = col + 1; r < 3; ++r) {
      const double f = a[r][col] / a[col][col];
      for (int k = col; k < 3; ++k) a[r][k] -= f * a[col][k];
      b[r] -= f * b[col];
    }
  }
  for (int r = 2; r >= 0; --r) {
    double s = b[r];
    for (int k = r + 1; k < 3; ++k) s -= a[r][k] * x[k];
    x[r] = s / a[r][r];
  }
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

DecayFit fit_exp_decay(std::span<const double> means) {
  constexpr int kMaxIterations = 200;
  constexpr double kRelTol = 1e-10;

  if (means.size() < 3) throw InvalidInput("decay fit needs at least three points");
  DecayFit fit;
  const auto [lo, hi] = std::minmax_element(means.begin(), means.end());
  const double mean = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(means.size());
  if (*hi - *lo <= 1e-12 * std::max(1.0, std::abs(mean))) {
    fit.amplitude = 0.0;
    fit.decay = 1.0;
    fit.offset = mean;
    fit.rss = rss_of(means, {0.0, 1.0, mean});
    fit.degenerate = true;
    fit.converged = true;
    fit.rss_history = {fit.rss};
    return fit;
  }

  Vec3 p{means.front() - means.back(), 1.0, means.back()};
  double rss = rss_of(means, p);
  fit.rss_history.push_back(rss);
  double lambda = 1e-3;

  int it = 0;
  for (; it < kMaxIterations; ++it) {
    Mat3 jtj{};
    Vec3 jtr{};
    for (std::size_t i = 0; i < means.size(); ++i) {
      const double n = static_cast<double>(i + 1);
      const double e = std::exp(-n / p[1]);
      const Vec3 j{e, p[0] * e * n / (p[1] * p[1]), 1.0};
      const double r = means[i] - (p[0] * e + p[2]);
      for (int a = 0; a < 3; ++a) {
        jtr[a] += j[a] * r;
        for (int b = 0; b < 3; ++b) jtj[a][b] += j[a] * j[b];
      }
    }

    bool accepted = false;
    while (lambda < 1e16) {
      Mat3 damped = jtj;
      for (int a = 0; a < 3; ++a) damped[a][a] += lambda * std::max(jtj[a][a], 1e-12);
      Vec3 delta{};
      Vec3 trial = p;
      if (solve3(damped, jtr, delta)) {
        for (int a = 0; a < 3; ++a) trial[a] += delta[a];
      }
      const double trial_rss = trial[1] > 0.0 ? rss_of(means, trial) : std::numeric_limits<double>::infinity();
      if (std::isfinite(trial_rss) && trial_rss <= rss) {
        const double rel = rss > 0.0 ? (rss - trial_rss) / rss : 0.0;
        p = trial;
        rss = trial_rss;
        fit.rss_history.push_back(rss);
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        if (rel < kRelTol) fit.converged = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) {
      fit.converged = true;  // no damping level improves the residual
      break;
    }
    if (fit.converged || rss == 0.0) {
      fit.converged = true;
      ++it;
      break;
    }
  }

  fit.amplitude = p[0];
  fit.decay = p[1];
  fit.offset = p[2];
  fit.rss = rss;
  fit.iterations = it;
  return fit;
}

std::vector<Point2> standardize(std::span<const Point2> points) {
  if (points.size() < 2) throw InvalidInput("standardize needs at least two points");
  const double n = static_cast<double>(points.size());
  double mx = 0.0, my = 0.0;
  for (const auto& p : points) {
    mx += p.x;
    my += p.y;
  }
  mx /= n;
  my /= n;
  double vx = 0.0, vy = 0.0;
  for (const auto& p : points) {
    vx += (p.x - mx) * (p.x - mx);
    vy += (p.y - my) * (p.y - my);
  }
  const double sx = std::sqrt(vx / n);
  const double sy = std::sqrt(vy / n);
  if (!(sx > 0.0) || !(sy > 0.0)) throw InvalidInput("cannot standardize an axis with zero variance");
  std::vector<Point2> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back({(p.x - mx) / sx, (p.y - my) / sy});
  return out;
}

std::vector<int> dbscan(std::span<const Point2> points, const DbscanParams& params) {
  if (!(params.eps > 0.0)) throw InvalidInput("eps must be positive");
  if (params.min_neighbours < 1) throw InvalidInput("min_neighbours must be at least 1");
  const std::size_t n = points.size();
  const double eps2 = params.eps * params.eps;

  std::vector<std::vector<std::size_t>> neighbours(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = points[i].x - points[j].x;
      const double dy = points[i].y - points[j].y;
      if (dx * dx + dy * dy <= eps2) {
        neighbours[i].push_back(j);
        neighbours[j].push_back(i);
      }
    }
  }
  std::vector<bool> core(n);
  for (std::size_t i = 0; i < n; ++i) core[i] = neighbours[i].size() >= static_cast<std::size_t>(params.min_neighbours);

  std::vector<int> labels(n, kNoise);
  int next = 0;
  for (std::size_t seed = 0; seed < n; ++seed) {
    if (!core[seed] || labels[seed] != kNoise) continue;
    const int id = next++;
    std::deque<std::size_t> queue{seed};
    labels[seed] = id;
    while (!queue.empty()) {
      const std::size_t i = queue.front();
      queue.pop_front();
      for (std::size_t j : neighbours[i]) {
        if (core[j] && labels[j] == kNoise) {
          labels[j] = id;
          queue.push_back(j);
        }
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) continue;
    for (std::size_t j : neighbours[i]) {
      if (core[j] && (labels[i] == kNoise || labels[j] < labels[i])) labels[i] = labels[j];
    }
  }
  return labels;
}

}  // namespace sonicgrid
