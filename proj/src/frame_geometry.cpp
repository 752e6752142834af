#include "kasner/frame_geometry.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace kasner {

namespace {

using Mat = Eigen::MatrixXd;

Mat metric_at(const Field& g, int D, std::size_t p) {
  Mat m(D, D);
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) m(i, j) = g(idx2(D, i, j), p);
  return m;
}

void check_spd(const Grid& grid, const Field& g) {
  const int D = grid.dim();
  double worst = std::numeric_limits<double>::infinity();
  std::size_t worst_p = 0;
  for (std::size_t p = 0; p < grid.num_points(); ++p) {
    Mat m = metric_at(g, D, p);
    Mat sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    if (lo < worst) {
      worst = lo;
      worst_p = p;
    }
  }
  if (!(worst > 1e-10)) throw NonSpdMetricError(worst_p, worst);
}

// Gram-Schmidt on coordinate vectors in the given order; writes rows of the
// frame matrix E(I, i) = e_I^i for frame slots slot_of[order index].
Mat gram_schmidt_point(const Mat& g, const std::vector<int>& order) {
  const int D = static_cast<int>(g.rows());
  Mat E = Mat::Zero(D, D);
  for (int m = 0; m < D; ++m) {
    const int coord = order[m];
    Eigen::VectorXd v = Eigen::VectorXd::Unit(D, coord);
    for (int prev = 0; prev < m; ++prev) {
      const Eigen::VectorXd ep = E.row(order[prev]).transpose();
      v -= (v.dot(g * ep)) * ep;
    }
    v /= std::sqrt(v.dot(g * v));
    E.row(coord) = v.transpose();
  }
  return E;
}

FramePair build_frame(const Grid& grid, const Field& g, const std::vector<int>& order) {
  const int D = grid.dim();
  const std::size_t np = grid.num_points();
  FramePair fp{Field(D * D, np), Field(D * D, np)};
#pragma omp parallel for num_threads(worker_threads()) schedule(static)
  for (std::size_t p = 0; p < np; ++p) {
    const Mat gm = metric_at(g, D, p);
    const Mat E = gram_schmidt_point(gm, order);
    const Mat W = E.inverse();  // W(i, I) = w_i^I since E * W = 1
    for (int I = 0; I < D; ++I)
      for (int i = 0; i < D; ++i) {
        fp.e(idx2(D, I, i), p) = E(I, i);
        fp.omega(idx2(D, i, I), p) = W(i, I);
      }
  }
  return fp;
}

}  // namespace

FramePair gram_schmidt_frame(const Grid& grid, const Field& g) {
  const int D = grid.dim();
  if (g.ncomp() != D * D) throw std::invalid_argument("metric must have D*D components");
  check_spd(grid, g);
  std::vector<int> order(D);
  for (int i = 0; i < D; ++i) order[i] = i;
  return build_frame(grid, g, order);
}

FramePair gram_schmidt_frame_u1(const Grid& grid, const Field& g) {
  const int D = grid.dim();
  if (D != 3) throw PolarizationError("polarized U(1) frame requires D = 3");
  if (g.ncomp() != 9) throw std::invalid_argument("metric must have 9 components");
  for (int c : {idx2(3, 0, 2), idx2(3, 2, 0), idx2(3, 1, 2), idx2(3, 2, 1)}) {
    const double m = *std::max_element(g.span(c).begin(), g.span(c).end(),
                                       [](double a, double b) { return std::abs(a) < std::abs(b); });
    if (std::abs(m) > 1e-12)
      throw PolarizationError("metric component g_{13} or g_{23} is nonzero (" +
                              std::to_string(std::abs(m)) + ")");
  }
  if (grid.axis_of(2) >= 0) {
    std::vector<double> d(grid.num_points());
    for (int c = 0; c < 9; ++c) {
      grid.partial(g.span(c), 2, d, false);
      for (double v : d)
        if (std::abs(v) > 1e-12) throw PolarizationError("metric depends on x^3");
    }
  }
  check_spd(grid, g);
  return build_frame(grid, g, {2, 0, 1});
}

Field metric_from_coframe(const Grid& grid, const Field& omega) {
  const int D = grid.dim();
  const std::size_t np = grid.num_points();
  Field g(D * D, np);
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) {
      double* out = g.comp(idx2(D, i, j));
      for (int A = 0; A < D; ++A) {
        const double* wi = omega.comp(idx2(D, i, A));
        const double* wj = omega.comp(idx2(D, j, A));
        for (std::size_t p = 0; p < np; ++p) out[p] += wi[p] * wj[p];
      }
    }
  return g;
}

Field koszul_gamma(const Grid& grid, const FramePair& frame) {
  const int D = grid.dim();
  const int na = grid.num_active();
  const std::size_t np = grid.num_points();
  const auto& act = grid.active_dims();

  // grad e_J^c, layout [(J*D + c)][axis][p]
  std::vector<double> grad(static_cast<std::size_t>(D) * D * na * np);
  grid.gradient(frame.e.all(), D * D, grad);
  auto de = [&](int J, int c, int a) {
    return grad.data() + (static_cast<std::size_t>(idx2(D, J, c)) * na + a) * np;
  };

  // C_IJ^B = w_c^B (e_I e_J^c - e_J e_I^c)
  Field C(D * D * D, np);
#pragma omp parallel for num_threads(worker_threads()) schedule(static)
  for (int I = 0; I < D; ++I) {
    std::vector<double> comm(np);
    for (int J = 0; J < D; ++J) {
      for (int c = 0; c < D; ++c) {
        std::fill(comm.begin(), comm.end(), 0.0);
        for (int a = 0; a < na; ++a) {
          const double* eI = frame.e.comp(idx2(D, I, act[a]));
          const double* eJ = frame.e.comp(idx2(D, J, act[a]));
          const double* dJ = de(J, c, a);
          const double* dI = de(I, c, a);
          for (std::size_t p = 0; p < np; ++p) comm[p] += eI[p] * dJ[p] - eJ[p] * dI[p];
        }
        for (int B = 0; B < D; ++B) {
          const double* w = frame.omega.comp(idx2(D, c, B));
          double* out = C.comp(idx3(D, I, J, B));
          for (std::size_t p = 0; p < np; ++p) out[p] += w[p] * comm[p];
        }
      }
    }
  }

  Field gamma(D * D * D, np);
  for (int I = 0; I < D; ++I)
    for (int J = 0; J < D; ++J)
      for (int B = 0; B < D; ++B) {
        const double* c1 = C.comp(idx3(D, I, J, B));
        const double* c2 = C.comp(idx3(D, J, B, I));
        const double* c3 = C.comp(idx3(D, B, I, J));
        double* out = gamma.comp(idx3(D, I, J, B));
        for (std::size_t p = 0; p < np; ++p) out[p] = 0.5 * (c1[p] - c2[p] + c3[p]);
      }
  return gamma;
}

Field structure_coefficients(int D, const Field& gamma) {
  const std::size_t np = gamma.npts();
  Field S(D * D * D, np);
  for (int I = 0; I < D; ++I)
    for (int J = 0; J < D; ++J)
      for (int B = 0; B < D; ++B) {
        const double* a = gamma.comp(idx3(D, I, J, B));
        const double* b = gamma.comp(idx3(D, J, B, I));
        double* out = S.comp(idx3(D, I, J, B));
        for (std::size_t p = 0; p < np; ++p) out[p] = a[p] + b[p];
      }
  return S;
}

Field recover_gamma(int D, const Field& S) {
  const std::size_t np = S.npts();
  Field gamma(D * D * D, np);
  for (int I = 0; I < D; ++I)
    for (int J = 0; J < D; ++J)
      for (int B = 0; B < D; ++B) {
        const double* s1 = S.comp(idx3(D, I, J, B));
        const double* s2 = S.comp(idx3(D, B, J, I));
        const double* s3 = S.comp(idx3(D, B, I, J));
        double* out = gamma.comp(idx3(D, I, J, B));
        for (std::size_t p = 0; p < np; ++p) out[p] = 0.5 * (s1[p] + s2[p] + s3[p]);
      }
  return gamma;
}

double duality_residual(int D, const FramePair& frame) {
  const std::size_t np = frame.e.npts();
  double worst = 0.0;
  for (std::size_t p = 0; p < np; ++p)
    for (int I = 0; I < D; ++I)
      for (int J = 0; J < D; ++J) {
        double s = 0.0;
        for (int a = 0; a < D; ++a) s += frame.omega(idx2(D, a, I), p) * frame.e(idx2(D, J, a), p);
        worst = std::max(worst, std::abs(s - (I == J ? 1.0 : 0.0)));
      }
  return worst;
}

double antisymmetry_residual(int D, const Field& gamma) {
  const std::size_t np = gamma.npts();
  double worst = 0.0;
  for (int I = 0; I < D; ++I)
    for (int J = 0; J < D; ++J)
      for (int B = J; B < D; ++B) {
        const double* a = gamma.comp(idx3(D, I, J, B));
        const double* b = gamma.comp(idx3(D, I, B, J));
        for (std::size_t p = 0; p < np; ++p) worst = std::max(worst, std::abs(a[p] + b[p]));
      }
  return worst;
}

double orthonormality_residual(int D, const Field& g, const Field& e) {
  const std::size_t np = g.npts();
  double worst = 0.0;
  for (std::size_t p = 0; p < np; ++p)
    for (int I = 0; I < D; ++I)
      for (int J = 0; J < D; ++J) {
        double s = 0.0;
        for (int c = 0; c < D; ++c)
          for (int d = 0; d < D; ++d)
            s += g(idx2(D, c, d), p) * e(idx2(D, I, c), p) * e(idx2(D, J, d), p);
        worst = std::max(worst, std::abs(s - (I == J ? 1.0 : 0.0)));
      }
  return worst;
}

}  // namespace kasner
