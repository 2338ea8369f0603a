#include "rhocal/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace rhocal::optimize {

SimplexResult nelder_mead(const std::function<double(const Vector&)>& objective,
                          const Vector& start, const SimplexOptions& options) {
  const auto n = start.size();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  auto eval = [&](const Vector& x) {
    const double f = objective(x);
    return std::isfinite(f) ? f : kInf;
  };

  std::vector<Vector> pts(static_cast<std::size_t>(n + 1), start);
  std::vector<double> vals(static_cast<std::size_t>(n + 1));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double step = start[i] != 0.0 ? options.initial_step * std::max(1.0, std::abs(start[i]))
                                        : options.initial_step;
    pts[static_cast<std::size_t>(i + 1)][i] += step;
  }
  for (std::size_t i = 0; i < pts.size(); ++i) vals[i] = eval(pts[i]);

  std::vector<std::size_t> order(pts.size());
  SimplexResult result;
  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[order.size() - 2];

    double diameter = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      diameter = std::max(diameter, (pts[i] - pts[best]).cwiseAbs().maxCoeff());
    }
    const double spread = vals[worst] - vals[best];
    if (std::isfinite(vals[best]) && spread <= options.f_tolerance * (1.0 + std::abs(vals[best])) &&
        diameter <= options.x_tolerance * (1.0 + pts[best].cwiseAbs().maxCoeff())) {
      result.converged = true;
      break;
    }

    Vector centroid = Vector::Zero(n);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i != worst) centroid += pts[i];
    }
    centroid /= static_cast<double>(n);

    const Vector reflected = centroid + (centroid - pts[worst]);
    const double f_reflected = eval(reflected);
    if (f_reflected < vals[best]) {
      const Vector expanded = centroid + 2.0 * (centroid - pts[worst]);
      const double f_expanded = eval(expanded);
      if (f_expanded < f_reflected) {
        pts[worst] = expanded;
        vals[worst] = f_expanded;
      } else {
        pts[worst] = reflected;
        vals[worst] = f_reflected;
      }
      continue;
    }
    if (f_reflected < vals[second]) {
      pts[worst] = reflected;
      vals[worst] = f_reflected;
      continue;
    }
    const bool outside = f_reflected < vals[worst];
    const Vector contracted = outside ? Vector(centroid + 0.5 * (reflected - centroid))
                                      : Vector(centroid + 0.5 * (pts[worst] - centroid));
    const double f_contracted = eval(contracted);
    if (f_contracted < (outside ? f_reflected : vals[worst])) {
      pts[worst] = contracted;
      vals[worst] = f_contracted;
      continue;
    }
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i == best) continue;
      pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
      vals[i] = eval(pts[i]);
    }
  }

  const auto best_it = std::min_element(vals.begin(), vals.end());
  const auto best = static_cast<std::size_t>(best_it - vals.begin());
  result.x = pts[best];
  result.value = vals[best];
  result.iterations = iter;
  return result;
}

}  // namespace rhocal::optimize
