#include "kasner/kasner_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace kasner {

KasnerData KasnerData::flrw() {
  return KasnerData{3, {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, std::sqrt(2.0 / 3.0)};
}

namespace {

void check_shape(const KasnerData& data) {
  if (data.dim < 3) throw std::invalid_argument("Kasner dimension must be >= 3");
  if (static_cast<int>(data.exponents.size()) != data.dim) {
    throw std::invalid_argument("exponent list has " + std::to_string(data.exponents.size()) +
                                " entries but dim = " + std::to_string(data.dim));
  }
}

}  // namespace

ConstraintReport validate_constraints(const KasnerData& data, double tol) {
  check_shape(data);
  double sum = 0.0, sumsq = 0.0;
  for (double q : data.exponents) {
    sum += q;
    sumsq += q * q;
  }
  ConstraintReport r;
  r.sum_residual = std::abs(sum - 1.0);
  r.sumsq_residual = std::abs(sumsq - (1.0 - data.scalar_coeff * data.scalar_coeff));
  r.ok = r.sum_residual <= tol && r.sumsq_residual <= tol && data.scalar_coeff >= 0.0;
  return r;
}

MarginReport subcriticality_margin(const KasnerData& data) {
  check_shape(data);
  const auto& q = data.exponents;
  const int d = data.dim;
  MarginReport r;
  r.margin = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      for (int b = 0; b < d; ++b) {
        double v = q[i] + q[j] - q[b];
        if (v > r.margin) {
          r.margin = v;
          r.witness = {i, j, b};
        }
      }
  r.subcritical = r.margin < 1.0;
  return r;
}

namespace {

double general_window_margin(const KasnerData& data, StabilityMode mode) {
  const auto& q = data.exponents;
  double m = 0.0;
  for (double v : q) m = std::max(m, std::abs(v));
  if (mode == StabilityMode::general) m = std::max(m, subcriticality_margin(data).margin);
  return m;
}

}  // namespace

bool stability_params_admissible(const KasnerData& data, const StabilityParams& p) {
  if (p.mode == StabilityMode::polarized_u1 && data.dim != 3) return false;
  const double m = general_window_margin(data, p.mode);
  return 0.0 < 2.0 * p.sigma && 2.0 * p.sigma + m < p.q && p.q < 1.0 - 2.0 * p.sigma;
}

std::optional<StabilityParams> default_stability_params(const KasnerData& data,
                                                        StabilityMode mode) {
  if (mode == StabilityMode::polarized_u1 && data.dim != 3) return std::nullopt;
  const double m = general_window_margin(data, mode);
  if (m >= 1.0) return std::nullopt;
  StabilityParams p;
  p.mode = mode;
  p.sigma = (1.0 - m) / 8.0;
  p.q = 0.5 * (m + 1.0);
  return p;
}

namespace {

// Smoothed margin: softmax over pairs of q_I + q_J minus softmin over q_B.
// Returns the smoothed value and writes its gradient.
double smooth_margin(const std::vector<double>& q, double beta, std::vector<double>& grad) {
  const int d = static_cast<int>(q.size());
  std::fill(grad.begin(), grad.end(), 0.0);
  double top = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) top = std::max(top, q[i] + q[j]);
  double zs = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) zs += std::exp(beta * (q[i] + q[j] - top));
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      double w = std::exp(beta * (q[i] + q[j] - top)) / zs;
      grad[i] += w;
      grad[j] += w;
    }
  const double pair_max = top + std::log(zs) / beta;

  double lo = *std::min_element(q.begin(), q.end());
  double zm = 0.0;
  for (int b = 0; b < d; ++b) zm += std::exp(-beta * (q[b] - lo));
  for (int b = 0; b < d; ++b) grad[b] -= std::exp(-beta * (q[b] - lo)) / zm;
  const double single_min = lo - std::log(zm) / beta;
  return pair_max - single_min;
}

// Projects onto {sum q = 1, sum q^2 = 1}: a (D-2)-sphere of radius
// sqrt(1 - 1/D) centred at (1/D, ..., 1/D) inside the hyperplane.
void project_to_vacuum_sphere(std::vector<double>& q) {
  const int d = static_cast<int>(q.size());
  const double c = 1.0 / d;
  const double radius = std::sqrt(1.0 - c);
  double mean = std::accumulate(q.begin(), q.end(), 0.0) / d;
  double norm2 = 0.0;
  for (double& v : q) {
    v -= mean;
    norm2 += v * v;
  }
  const double s = radius / std::sqrt(norm2);
  for (double& v : q) v = c + s * v;
}

}  // namespace

SearchResult search_subcritical_vacuum(int dim, double tol, const SearchOptions& opts) {
  if (dim < 3) throw std::invalid_argument("Kasner dimension must be >= 3");
  SearchResult result;
  result.best_margin = std::numeric_limits<double>::infinity();
  if (dim <= 9) {
    result.status = SearchStatus::infeasible;
    return result;
  }

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> q(dim), grad(dim), best;

  for (int restart = 0; restart < opts.restarts; ++restart) {
    result.restarts_used = restart + 1;
    for (double& v : q) v = normal(rng);
    project_to_vacuum_sphere(q);

    for (int it = 0; it < opts.iterations; ++it) {
      const double frac = static_cast<double>(it) / opts.iterations;
      const double beta = 20.0 * std::pow(100.0, frac);
      const double step = 0.05 * (1.0 - frac) + 1e-4;
      smooth_margin(q, beta, grad);
      // Tangential part of the gradient: remove the components along the
      // hyperplane normal (1,...,1) and the radial direction q - c.
      const double gmean = std::accumulate(grad.begin(), grad.end(), 0.0) / dim;
      double rad_dot = 0.0, rad_norm2 = 0.0;
      for (int i = 0; i < dim; ++i) {
        grad[i] -= gmean;
        const double r = q[i] - 1.0 / dim;
        rad_dot += grad[i] * r;
        rad_norm2 += r * r;
      }
      for (int i = 0; i < dim; ++i) {
        grad[i] -= rad_dot / rad_norm2 * (q[i] - 1.0 / dim);
        q[i] -= step * grad[i];
      }
      project_to_vacuum_sphere(q);
    }

    KasnerData candidate{dim, q, 0.0};
    const double m = subcriticality_margin(candidate).margin;
    if (m < result.best_margin) {
      result.best_margin = m;
      best = q;
    }
    if (m < 1.0 - tol && validate_constraints(candidate).ok) {
      result.status = SearchStatus::found;
      result.data = candidate;
      return result;
    }
  }
  result.status = SearchStatus::budget_exhausted;
  return result;
}

BackgroundFields background_fields(const KasnerData& data, double t) {
  check_shape(data);
  if (!(t > 0.0)) throw std::domain_error("background_fields requires t > 0");
  const int d = data.dim;
  BackgroundFields f;
  f.t = t;
  f.e.assign(d * d, 0.0);
  f.omega.assign(d * d, 0.0);
  f.k.assign(d * d, 0.0);
  f.epsi.assign(d, 0.0);
  for (int i = 0; i < d; ++i) {
    const double qi = data.exponents[i];
    f.e[i * d + i] = std::pow(t, -qi);
    f.omega[i * d + i] = std::pow(t, qi);
    f.k[i * d + i] = -qi / t;
  }
  f.e0psi = data.scalar_coeff / t;
  return f;
}

}  // namespace kasner
