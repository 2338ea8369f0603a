#include "rhocal/quantile_regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rhocal::qr {

namespace {

constexpr double kStepScale = 0.99995;

// Largest step in (0, 1] keeping x + t dx >= 0.
double max_step(const Vector& x, const Vector& dx) {
  double t = 1.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (dx[i] < 0.0) t = std::min(t, -x[i] / dx[i]);
  }
  return t;
}

}  // namespace

LpSolution solve_quantile_lp(const Matrix& X, const Vector& y, double tau, const LpOptions& options) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (y.size() != n) throw Error(ErrorKind::LengthMismatch, "quantile LP: X and y differ in rows");
  if (!(tau > 0.0 && tau < 1.0)) throw Error(ErrorKind::BadConfig, "quantile level must lie in (0,1)");

  // Bounded LP: min c'x s.t. A x = b, 0 <= x <= 1, with A = X', c = -y.
  const Vector c = -y;
  const Vector b = (1.0 - tau) * X.colwise().sum().transpose();
  Vector x = Vector::Constant(n, 1.0 - tau);
  Vector s = Vector::Constant(n, tau);
  Vector dual = (X.transpose() * X).ldlt().solve(X.transpose() * c);
  const Vector r0 = c - X * dual;
  const double shift = 0.1 * std::max(r0.cwiseAbs().mean(), 1e-10);
  Vector z = r0.cwiseMax(0.0).array() + shift;
  Vector w = (-r0).cwiseMax(0.0).array() + shift;

  const double scale_b = 1.0 + b.norm();
  const double scale_c = 1.0 + c.norm();
  LpSolution out;
  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    const Vector r_p = b - X.transpose() * x;
    const Vector r_d = c - X * dual - z + w;
    const double gap = x.dot(z) + s.dot(w);
    out.duality_gap = gap;
    if (gap <= options.gap_tolerance && r_p.norm() <= options.feasibility_tolerance * scale_b &&
        r_d.norm() <= options.feasibility_tolerance * scale_c) {
      out.converged = true;
      break;
    }
    const double mu = gap / static_cast<double>(2 * n);

    const Vector theta = (z.array() / x.array() + w.array() / s.array()).inverse();
    const Matrix normal = X.transpose() * (X.array().colwise() * theta.array()).matrix();
    const Eigen::LDLT<Matrix> chol(normal);

    // Solves the reduced system for complementarity targets t_xz, t_sw.
    auto direction = [&](const Vector& t_xz, const Vector& t_sw, Vector& dx, Vector& dy, Vector& dz,
                         Vector& dw) {
      const Vector rho = r_d - (t_xz.array() / x.array()).matrix() + (t_sw.array() / s.array()).matrix();
      dy = chol.solve(r_p + X.transpose() * (theta.array() * rho.array()).matrix());
      dx = (theta.array() * (X * dy - rho).array()).matrix();
      dz = ((t_xz.array() - z.array() * dx.array()) / x.array()).matrix();
      dw = ((t_sw.array() + w.array() * dx.array()) / s.array()).matrix();
    };

    Vector dx, dy, dz, dw;
    direction(-(x.array() * z.array()).matrix(), -(s.array() * w.array()).matrix(), dx, dy, dz, dw);
    double step_p = std::min(max_step(x, dx), max_step(s, -dx));
    double step_d = std::min(max_step(z, dz), max_step(w, dw));
    const double mu_aff = ((x + step_p * dx).dot(z + step_d * dz) + (s - step_p * dx).dot(w + step_d * dw)) /
                          static_cast<double>(2 * n);
    const double sigma = std::pow(mu_aff / mu, 3.0);

    const Vector t_xz = (sigma * mu - x.array() * z.array() - dx.array() * dz.array()).matrix();
    const Vector t_sw = (sigma * mu - s.array() * w.array() + dx.array() * dw.array()).matrix();
    direction(t_xz, t_sw, dx, dy, dz, dw);
    step_p = std::min(1.0, kStepScale * std::min(max_step(x, dx), max_step(s, -dx)));
    step_d = std::min(1.0, kStepScale * std::min(max_step(z, dz), max_step(w, dw)));

    x += step_p * dx;
    s = (1.0 - x.array()).matrix();
    s = s.cwiseMax(std::numeric_limits<double>::min());
    x = x.cwiseMax(std::numeric_limits<double>::min());
    dual += step_d * dy;
    z += step_d * dz;
    w += step_d * dw;
    if (!x.allFinite() || !dual.allFinite() || !z.allFinite() || !w.allFinite()) break;
  }

  out.iterations = iter;
  out.beta = -dual;
  const Vector resid = y - X * out.beta;
  out.objective = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) out.objective += pinball(resid[i], tau);
  if (!out.beta.allFinite()) out.converged = false;
  (void)p;
  return out;
}

Model fit_penalized(const Matrix& features, const Vector& y, double tau, double l1_penalty,
                    const LpOptions& options) {
  const Eigen::Index n = features.rows();
  const Eigen::Index k = features.cols();
  if (y.size() != n) throw Error(ErrorKind::LengthMismatch, "quantile regression: X and y differ in rows");
  if (n < 2 * (k + 1)) {
    throw Error(ErrorKind::DegenerateDesign, "quantile regression needs at least twice as many rows as features");
  }

  Model model;
  model.mean = features.colwise().mean().transpose();
  model.scale.resize(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double sd = std::sqrt((features.col(j).array() - model.mean[j]).square().mean());
    model.scale[j] = sd;
    if (sd > 1e-12 * std::max(1.0, std::abs(model.mean[j]))) {
      model.kept.push_back(static_cast<std::size_t>(j));
    } else {
      model.dropped.push_back(static_cast<std::size_t>(j));
    }
  }

  const auto kept = static_cast<Eigen::Index>(model.kept.size());
  const Eigen::Index pseudo = l1_penalty > 0.0 ? 2 * kept : 0;
  Matrix design = Matrix::Zero(n + pseudo, kept + 1);
  Vector target = Vector::Zero(n + pseudo);
  design.col(0).head(n).setOnes();
  for (Eigen::Index j = 0; j < kept; ++j) {
    const auto col = static_cast<Eigen::Index>(model.kept[static_cast<std::size_t>(j)]);
    design.col(j + 1).head(n) = (features.col(col).array() - model.mean[col]) / model.scale[col];
    if (pseudo > 0) {
      // rho(-lambda b) + rho(lambda b) = lambda |b|.
      design(n + 2 * j, j + 1) = l1_penalty;
      design(n + 2 * j + 1, j + 1) = -l1_penalty;
    }
  }
  target.head(n) = y;

  model.solution = solve_quantile_lp(design, target, tau, options);
  model.intercept = model.solution.beta[0];
  model.slopes = model.solution.beta.tail(kept);
  return model;
}

Vector predict(const Model& model, const Matrix& features) {
  Vector out = Vector::Constant(features.rows(), model.intercept);
  for (std::size_t j = 0; j < model.kept.size(); ++j) {
    const auto col = static_cast<Eigen::Index>(model.kept[j]);
    out += model.slopes[static_cast<Eigen::Index>(j)] *
           ((features.col(col).array() - model.mean[col]) / model.scale[col]).matrix();
  }
  return out;
}

}  // namespace rhocal::qr
