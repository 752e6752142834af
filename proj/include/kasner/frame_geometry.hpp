#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include "kasner/grid.hpp"

namespace kasner {

// Index conventions for D-dimensional frame fields stored in a Field:
//   metric g_ij       -> i*D + j
//   frame e_I^i       -> I*D + i
//   co-frame w_i^I    -> i*D + I
//   k_IJ              -> I*D + J
//   gamma_IJB         -> (I*D + J)*D + B
inline int idx2(int D, int a, int b) { return a * D + b; }
inline int idx3(int D, int a, int b, int c) { return (a * D + b) * D + c; }

struct FramePair {
  Field e;
  Field omega;
};

class NonSpdMetricError : public std::runtime_error {
 public:
  NonSpdMetricError(std::size_t point, double eigenvalue)
      : std::runtime_error("metric not positive definite at point " + std::to_string(point) +
                           " (smallest eigenvalue " + std::to_string(eigenvalue) + ")"),
        point_(point),
        eigenvalue_(eigenvalue) {}
  std::size_t point() const { return point_; }
  double eigenvalue() const { return eigenvalue_; }

 private:
  std::size_t point_;
  double eigenvalue_;
};

class PolarizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Orthonormal frame from g by Gram-Schmidt on d_1, d_2, ..., d_D in that
/// order; the co-frame is the pointwise matrix inverse of the frame.
/// Throws NonSpdMetricError at the worst point if min eigenvalue <= 1e-10.
FramePair gram_schmidt_frame(const Grid& grid, const Field& g);

/// D = 3 polarized variant: e_3 = d_3 / sqrt(g_33) first, then d_1, d_2.
/// Requires g_13 = g_23 = 0 and no x^3 dependence (PolarizationError).
FramePair gram_schmidt_frame_u1(const Grid& grid, const Field& g);

/// g_ij = w_i^A w_j^A.
Field metric_from_coframe(const Grid& grid, const Field& omega);

/// Connection coefficients from the frame through the Koszul formula,
/// gamma_IJB = 1/2 { C_IJ^B - C_JB^I + C_BI^J } with C_IJ^B the frame
/// components of [e_I, e_J].
Field koszul_gamma(const Grid& grid, const FramePair& frame);

/// S_IJB = gamma_IJB + gamma_JBI.
Field structure_coefficients(int D, const Field& gamma);

/// gamma_IJB = 1/2 (S_IJB + S_BJI + S_BIJ); exact inverse of
/// structure_coefficients on gammas antisymmetric in the last two indices.
Field recover_gamma(int D, const Field& S);

/// max |w_a^I e_J^a - delta_IJ|.
double duality_residual(int D, const FramePair& frame);

/// max |gamma_IJB + gamma_IBJ|.
double antisymmetry_residual(int D, const Field& gamma);

/// max |g_cd e_I^c e_J^d - delta_IJ|.
double orthonormality_residual(int D, const Field& g, const Field& e);

}  // namespace kasner
