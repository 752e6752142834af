#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

namespace kasner {

/// Periodic grid on the torus T^D (side 2 pi). Fields vary only along the
/// active coordinates; derivatives along inactive coordinates are zero.
/// Points are stored row-major over the active axes (first active axis
/// slowest). Holds FFTW plans, so it is shared rather than copied.
class Grid {
 public:
  /// `active_dims` are 0-based coordinate indices, strictly increasing.
  Grid(int dim, std::vector<int> active_dims, std::vector<int> sizes);
  ~Grid();
  Grid(const Grid&) = delete;
  Grid& operator=(const Grid&) = delete;

  static std::shared_ptr<const Grid> make(int dim, std::vector<int> active_dims,
                                          std::vector<int> sizes) {
    return std::make_shared<const Grid>(dim, std::move(active_dims), std::move(sizes));
  }

  int dim() const { return dim_; }
  int num_active() const { return static_cast<int>(active_.size()); }
  const std::vector<int>& active_dims() const { return active_; }
  const std::vector<int>& sizes() const { return sizes_; }
  std::size_t num_points() const { return npts_; }
  double spacing(int axis) const;
  double min_spacing() const;

  /// Axis slot of coordinate `coord`, or -1 if the coordinate is inactive.
  int axis_of(int coord) const;

  /// Coordinate value x^{active_dims[axis]} at grid point p.
  double coordinate(int axis, std::size_t p) const;

  /// d/dx^coord of a scalar field. With `dealias`, modes with 3|k| >= n along
  /// the differentiated axis are dropped (2/3 rule for the quadratic terms).
  void partial(std::span<const double> f, int coord, std::span<double> out,
               bool dealias = true) const;

  /// All active-axis derivatives of `ncomp` stacked components.
  /// Output layout: [comp][axis][point].
  void gradient(std::span<const double> f, int ncomp, std::span<double> out,
                bool dealias = true) const;

  /// d^iota f with iota a multi-index over the active axes (undealiased).
  void multi_derivative(std::span<const double> f, std::span<const int> iota,
                        std::span<double> out) const;

  /// Mixed second derivative d_a d_b (axis slots), dealiased like `partial`.
  void second_partial(std::span<const double> f, int axis_a, int axis_b,
                      std::span<double> out) const;

  /// Gradient (layout [axis][point]) and the upper-triangular Hessian
  /// (layout [pair][point], pairs (0,0),(0,1),..,(1,1),..) from one forward
  /// transform; dealiased like `partial` and `second_partial`.
  void gradient_and_hessian(std::span<const double> f, std::span<double> grad,
                            std::span<double> hess) const;

  /// Solves (sum_ab G^{ab} d_a d_b + c) u = r with constant G, c, using the
  /// same dealiased symbol as `second_partial`. `G` is num_active^2 row-major.
  void solve_constant_helmholtz(std::span<const double> G, double c,
                                std::span<const double> r, std::span<double> u) const;

  /// Spectral antiderivative along `coord`: u with d_coord u = f - f_0, where
  /// f_0 is the part of f independent of x^coord; u has no such part either.
  void antiderivative(std::span<const double> f, int coord, std::span<double> out) const;

  /// sum_{|iota| = order} ||d^iota f||^2_{L^2(T^D)} via Parseval.
  double homogeneous_sobolev_sq(std::span<const double> f, int order) const;

  /// Mean over the grid (fixed summation order).
  double mean(std::span<const double> f) const;

 private:
  struct Plans;

  int dim_;
  std::vector<int> active_;
  std::vector<int> sizes_;
  std::size_t npts_ = 1;
  std::size_t nspec_ = 1;
  std::unique_ptr<Plans> plans_;

  // Signed wavenumber of spectral index `idx` along axis `axis`.
  int wavenumber(int axis, std::size_t idx) const;
  bool kept(int axis, int k) const;
  // Decomposes a flat spectral index into per-axis indices.
  void spectral_index(std::size_t s, std::vector<std::size_t>& idx) const;
};

/// Flat container of `ncomp` scalar components on a grid, component-major.
class Field {
 public:
  Field() = default;
  Field(int ncomp, std::size_t npts, double value = 0.0)
      : ncomp_(ncomp), npts_(npts), data_(static_cast<std::size_t>(ncomp) * npts, value) {}

  int ncomp() const { return ncomp_; }
  std::size_t npts() const { return npts_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* comp(int c) { return data_.data() + static_cast<std::size_t>(c) * npts_; }
  const double* comp(int c) const { return data_.data() + static_cast<std::size_t>(c) * npts_; }
  std::span<double> span(int c) { return {comp(c), npts_}; }
  std::span<const double> span(int c) const { return {comp(c), npts_}; }
  std::span<double> all() { return data_; }
  std::span<const double> all() const { return data_; }

  double& operator()(int c, std::size_t p) { return data_[static_cast<std::size_t>(c) * npts_ + p]; }
  double operator()(int c, std::size_t p) const {
    return data_[static_cast<std::size_t>(c) * npts_ + p];
  }

  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

  bool all_finite() const;
  double max_abs() const;

 private:
  int ncomp_ = 0;
  std::size_t npts_ = 0;
  std::vector<double> data_;
};

/// e_I f = e_I^c d_c f for every frame index I. `e` holds e_I^i at index
/// I*D + i; output has D components.
Field frame_derivative(const Grid& grid, const Field& e, std::span<const double> f);

/// Frame derivatives of `ncomp` stacked components, layout [comp][I][point]:
/// out[(c*D + I)*npts + p] = e_I f_c at p.
std::vector<double> frame_gradient(const Grid& grid, const Field& e, std::span<const double> f,
                                   int ncomp);

/// Contracts a precomputed gradient (layout from Grid::gradient, one
/// component) with the frame: out_I = e_I^{coord(a)} grad_a.
void contract_frame(const Grid& grid, const Field& e, const double* grad, int I,
                    std::span<double> out);

/// Number of worker threads for data-parallel kernels (SIM_THREADS, or 1).
int worker_threads();
void set_worker_threads(int n);

}  // namespace kasner
