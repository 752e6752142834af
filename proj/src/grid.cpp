#include "kasner/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <mutex>
#include <numbers>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace kasner {

namespace {

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

int g_threads = -1;

struct RealBuf {
  double* p;
  explicit RealBuf(std::size_t n) : p(fftw_alloc_real(n)) {}
  ~RealBuf() { fftw_free(p); }
  RealBuf(const RealBuf&) = delete;
  RealBuf& operator=(const RealBuf&) = delete;
};

struct ComplexBuf {
  fftw_complex* p;
  explicit ComplexBuf(std::size_t n) : p(fftw_alloc_complex(n)) {}
  ~ComplexBuf() { fftw_free(p); }
  ComplexBuf(const ComplexBuf&) = delete;
  ComplexBuf& operator=(const ComplexBuf&) = delete;
};

bool is_uniform(std::span<const double> f) {
  const double v = f[0];
  for (double x : f)
    if (x != v) return false;
  return true;
}

}  // namespace

int worker_threads() {
  if (g_threads < 0) {
    g_threads = 1;
    if (const char* env = std::getenv("SIM_THREADS")) {
      const int n = std::atoi(env);
      if (n > 0) g_threads = n;
    }
  }
  return g_threads;
}

void set_worker_threads(int n) { g_threads = std::max(1, n); }

struct Grid::Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

Grid::Grid(int dim, std::vector<int> active_dims, std::vector<int> sizes)
    : dim_(dim), active_(std::move(active_dims)), sizes_(std::move(sizes)) {
  if (dim_ < 1) throw std::invalid_argument("grid dimension must be positive");
  if (active_.empty() || active_.size() > 3)
    throw std::invalid_argument("grid needs between 1 and 3 active coordinates");
  if (active_.size() != sizes_.size())
    throw std::invalid_argument("active_dims and sizes differ in length");
  for (std::size_t a = 0; a < active_.size(); ++a) {
    if (active_[a] < 0 || active_[a] >= dim_)
      throw std::invalid_argument("active coordinate " + std::to_string(active_[a] + 1) +
                                  " out of range");
    if (a > 0 && active_[a] <= active_[a - 1])
      throw std::invalid_argument("active coordinates must be strictly increasing");
    if (sizes_[a] < 8 || sizes_[a] % 2 != 0)
      throw std::invalid_argument("grid sizes must be even and >= 8");
    npts_ *= static_cast<std::size_t>(sizes_[a]);
  }
  for (std::size_t a = 0; a + 1 < sizes_.size(); ++a) nspec_ *= sizes_[a];
  nspec_ *= static_cast<std::size_t>(sizes_.back() / 2 + 1);

  plans_ = std::make_unique<Plans>();
  RealBuf r(npts_);
  ComplexBuf c(nspec_);
  std::lock_guard<std::mutex> lock(fftw_planner_mutex());
  plans_->forward = fftw_plan_dft_r2c(num_active(), sizes_.data(), r.p, c.p, FFTW_ESTIMATE);
  plans_->backward = fftw_plan_dft_c2r(num_active(), sizes_.data(), c.p, r.p, FFTW_ESTIMATE);
}

Grid::~Grid() {
  std::lock_guard<std::mutex> lock(fftw_planner_mutex());
  fftw_destroy_plan(plans_->forward);
  fftw_destroy_plan(plans_->backward);
}

double Grid::spacing(int axis) const { return 2.0 * std::numbers::pi / sizes_.at(axis); }

double Grid::min_spacing() const {
  double h = spacing(0);
  for (int a = 1; a < num_active(); ++a) h = std::min(h, spacing(a));
  return h;
}

int Grid::axis_of(int coord) const {
  for (int a = 0; a < num_active(); ++a)
    if (active_[a] == coord) return a;
  return -1;
}

double Grid::coordinate(int axis, std::size_t p) const {
  std::size_t stride = 1;
  for (int b = num_active() - 1; b > axis; --b) stride *= sizes_[b];
  const std::size_t idx = (p / stride) % sizes_[axis];
  return static_cast<double>(idx) * spacing(axis);
}

int Grid::wavenumber(int axis, std::size_t idx) const {
  const int n = sizes_[axis];
  const int i = static_cast<int>(idx);
  if (axis == num_active() - 1) return i;
  return i <= n / 2 ? i : i - n;
}

bool Grid::kept(int axis, int k) const { return 3 * std::abs(k) < sizes_[axis]; }

void Grid::spectral_index(std::size_t s, std::vector<std::size_t>& idx) const {
  idx.resize(num_active());
  const std::size_t last = sizes_.back() / 2 + 1;
  idx[num_active() - 1] = s % last;
  s /= last;
  for (int a = num_active() - 2; a >= 0; --a) {
    idx[a] = s % sizes_[a];
    s /= sizes_[a];
  }
}

void Grid::partial(std::span<const double> f, int coord, std::span<double> out,
                   bool dealias) const {
  if (coord < 0 || coord >= dim_)
    throw std::out_of_range("partial: coordinate " + std::to_string(coord) + " out of range");
  const int axis = axis_of(coord);
  if (axis < 0 || is_uniform(f)) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  RealBuf r(npts_);
  ComplexBuf c(nspec_);
  std::copy(f.begin(), f.end(), r.p);
  fftw_execute_dft_r2c(plans_->forward, r.p, c.p);
  std::vector<std::size_t> idx;
  const double norm = 1.0 / static_cast<double>(npts_);
  for (std::size_t s = 0; s < nspec_; ++s) {
    spectral_index(s, idx);
    const int k = wavenumber(axis, idx[axis]);
    const bool nyquist = 2 * std::abs(k) == sizes_[axis];
    const bool keep = !nyquist && (!dealias || kept(axis, k));
    const double re = c.p[s][0], im = c.p[s][1];
    const double kk = keep ? k * norm : 0.0;
    c.p[s][0] = -kk * im;
    c.p[s][1] = kk * re;
  }
  fftw_execute_dft_c2r(plans_->backward, c.p, r.p);
  std::copy(r.p, r.p + npts_, out.begin());
}

void Grid::antiderivative(std::span<const double> f, int coord, std::span<double> out) const {
  if (coord < 0 || coord >= dim_)
    throw std::out_of_range("antiderivative: coordinate " + std::to_string(coord) +
                            " out of range");
  const int axis = axis_of(coord);
  if (axis < 0 || is_uniform(f)) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  RealBuf r(npts_);
  ComplexBuf c(nspec_);
  std::copy(f.begin(), f.end(), r.p);
  fftw_execute_dft_r2c(plans_->forward, r.p, c.p);
  std::vector<std::size_t> idx;
  const double norm = 1.0 / static_cast<double>(npts_);
  for (std::size_t s = 0; s < nspec_; ++s) {
    spectral_index(s, idx);
    const int k = wavenumber(axis, idx[axis]);
    const bool drop = k == 0 || 2 * std::abs(k) == sizes_[axis];
    const double re = c.p[s][0], im = c.p[s][1];
    const double kk = drop ? 0.0 : norm / k;
    // divide by i k
    c.p[s][0] = kk * im;
    c.p[s][1] = -kk * re;
  }
  fftw_execute_dft_c2r(plans_->backward, c.p, r.p);
  std::copy(r.p, r.p + npts_, out.begin());
}

void Grid::gradient(std::span<const double> f, int ncomp, std::span<double> out,
                    bool dealias) const {
  const int na = num_active();
#pragma omp parallel for num_threads(worker_threads()) schedule(static)
  for (int c = 0; c < ncomp; ++c) {
    std::span<const double> fc = f.subspan(static_cast<std::size_t>(c) * npts_, npts_);
    double* base = out.data() + static_cast<std::size_t>(c) * na * npts_;
    if (is_uniform(fc)) {
      std::fill(base, base + na * npts_, 0.0);
      continue;
    }
    RealBuf r(npts_);
    ComplexBuf spec(nspec_);
    ComplexBuf work(nspec_);
    std::copy(fc.begin(), fc.end(), r.p);
    fftw_execute_dft_r2c(plans_->forward, r.p, spec.p);
    std::vector<std::size_t> idx;
    const double norm = 1.0 / static_cast<double>(npts_);
    for (int a = 0; a < na; ++a) {
      for (std::size_t s = 0; s < nspec_; ++s) {
        spectral_index(s, idx);
        const int k = wavenumber(a, idx[a]);
        const bool nyquist = 2 * std::abs(k) == sizes_[a];
        const bool keep = !nyquist && (!dealias || kept(a, k));
        const double kk = keep ? k * norm : 0.0;
        work.p[s][0] = -kk * spec.p[s][1];
        work.p[s][1] = kk * spec.p[s][0];
      }
      fftw_execute_dft_c2r(plans_->backward, work.p, r.p);
      std::copy(r.p, r.p + npts_, base + static_cast<std::size_t>(a) * npts_);
    }
  }
}

void Grid::multi_derivative(std::span<const double> f, std::span<const int> iota,
                            std::span<double> out) const {
  if (static_cast<int>(iota.size()) != num_active())
    throw std::invalid_argument("multi-index length must equal the number of active axes");
  int total = 0;
  for (int v : iota) total += v;
  if (total == 0) {
    std::copy(f.begin(), f.end(), out.begin());
    return;
  }
  if (is_uniform(f)) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  RealBuf r(npts_);
  ComplexBuf c(nspec_);
  std::copy(f.begin(), f.end(), r.p);
  fftw_execute_dft_r2c(plans_->forward, r.p, c.p);
  std::vector<std::size_t> idx;
  const double norm = 1.0 / static_cast<double>(npts_);
  for (std::size_t s = 0; s < nspec_; ++s) {
    spectral_index(s, idx);
    std::complex<double> sym(norm, 0.0);
    for (int a = 0; a < num_active(); ++a) {
      if (iota[a] == 0) continue;
      const int k = wavenumber(a, idx[a]);
      const bool nyquist = 2 * std::abs(k) == sizes_[a];
      if (nyquist && iota[a] % 2 == 1) {
        sym = 0.0;
        break;
      }
      sym *= std::pow(std::complex<double>(0.0, static_cast<double>(k)), iota[a]);
    }
    const std::complex<double> v = sym * std::complex<double>(c.p[s][0], c.p[s][1]);
    c.p[s][0] = v.real();
    c.p[s][1] = v.imag();
  }
  fftw_execute_dft_c2r(plans_->backward, c.p, r.p);
  std::copy(r.p, r.p + npts_, out.begin());
}

void Grid::second_partial(std::span<const double> f, int axis_a, int axis_b,
                          std::span<double> out) const {
  if (is_uniform(f)) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  RealBuf r(npts_);
  ComplexBuf c(nspec_);
  std::copy(f.begin(), f.end(), r.p);
  fftw_execute_dft_r2c(plans_->forward, r.p, c.p);
  std::vector<std::size_t> idx;
  const double norm = 1.0 / static_cast<double>(npts_);
  for (std::size_t s = 0; s < nspec_; ++s) {
    spectral_index(s, idx);
    const int ka = wavenumber(axis_a, idx[axis_a]);
    const int kb = wavenumber(axis_b, idx[axis_b]);
    const double sym = (kept(axis_a, ka) && kept(axis_b, kb)) ? -ka * kb * norm : 0.0;
    c.p[s][0] *= sym;
    c.p[s][1] *= sym;
  }
  fftw_execute_dft_c2r(plans_->backward, c.p, r.p);
  std::copy(r.p, r.p + npts_, out.begin());
}

void Grid::gradient_and_hessian(std::span<const double> f, std::span<double> grad,
                                std::span<double> hess) const {
  const int na = num_active();
  if (is_uniform(f)) {
    std::fill(grad.begin(), grad.end(), 0.0);
    std::fill(hess.begin(), hess.end(), 0.0);
    return;
  }
  RealBuf r(npts_);
  ComplexBuf spec(nspec_);
  ComplexBuf work(nspec_);
  std::copy(f.begin(), f.end(), r.p);
  fftw_execute_dft_r2c(plans_->forward, r.p, spec.p);
  const double norm = 1.0 / static_cast<double>(npts_);
  std::vector<std::size_t> idx;
  std::vector<int> k(na);
  auto wavevector = [&](std::size_t s) {
    spectral_index(s, idx);
    for (int a = 0; a < na; ++a) {
      const int ka = wavenumber(a, idx[a]);
      k[a] = kept(a, ka) ? ka : 0;
    }
  };
  for (int a = 0; a < na; ++a) {
    for (std::size_t s = 0; s < nspec_; ++s) {
      wavevector(s);
      const double kk = k[a] * norm;
      work.p[s][0] = -kk * spec.p[s][1];
      work.p[s][1] = kk * spec.p[s][0];
    }
    fftw_execute_dft_c2r(plans_->backward, work.p, r.p);
    std::copy(r.p, r.p + npts_, grad.begin() + static_cast<std::ptrdiff_t>(a * npts_));
  }
  int pair = 0;
  for (int a = 0; a < na; ++a)
    for (int b = a; b < na; ++b, ++pair) {
      for (std::size_t s = 0; s < nspec_; ++s) {
        wavevector(s);
        const double sym = -static_cast<double>(k[a]) * k[b] * norm;
        work.p[s][0] = sym * spec.p[s][0];
        work.p[s][1] = sym * spec.p[s][1];
      }
      fftw_execute_dft_c2r(plans_->backward, work.p, r.p);
      std::copy(r.p, r.p + npts_, hess.begin() + static_cast<std::ptrdiff_t>(pair * npts_));
    }
}

void Grid::solve_constant_helmholtz(std::span<const double> G, double c,
                                    std::span<const double> rhs, std::span<double> u) const {
  const int na = num_active();
  RealBuf r(npts_);
  ComplexBuf s(nspec_);
  std::copy(rhs.begin(), rhs.end(), r.p);
  fftw_execute_dft_r2c(plans_->forward, r.p, s.p);
  std::vector<std::size_t> idx;
  std::vector<int> k(na);
  const double norm = 1.0 / static_cast<double>(npts_);
  for (std::size_t m = 0; m < nspec_; ++m) {
    spectral_index(m, idx);
    for (int a = 0; a < na; ++a) {
      const int ka = wavenumber(a, idx[a]);
      k[a] = kept(a, ka) ? ka : 0;
    }
    double sym = c;
    for (int a = 0; a < na; ++a)
      for (int b = 0; b < na; ++b) sym -= G[a * na + b] * k[a] * k[b];
    if (sym == 0.0) throw std::domain_error("constant-coefficient operator is singular");
    const double scale = norm / sym;
    s.p[m][0] *= scale;
    s.p[m][1] *= scale;
  }
  fftw_execute_dft_c2r(plans_->backward, s.p, r.p);
  std::copy(r.p, r.p + npts_, u.begin());
}

double Grid::homogeneous_sobolev_sq(std::span<const double> f, int order) const {
  const int na = num_active();
  RealBuf r(npts_);
  ComplexBuf c(nspec_);
  std::copy(f.begin(), f.end(), r.p);
  fftw_execute_dft_r2c(plans_->forward, r.p, c.p);
  std::vector<std::size_t> idx;
  const double norm = 1.0 / static_cast<double>(npts_);
  const double volume = std::pow(2.0 * std::numbers::pi, dim_);
  const int nlast = sizes_.back();
  double total = 0.0;
  std::vector<double> h(order + 1);
  for (std::size_t s = 0; s < nspec_; ++s) {
    spectral_index(s, idx);
    // Complete homogeneous symmetric polynomial h_order(k_1^2, ..., k_na^2):
    // the sum over multi-indices |iota| = order of prod k^(2 iota).
    std::fill(h.begin(), h.end(), 0.0);
    h[0] = 1.0;
    for (int a = 0; a < na; ++a) {
      const double x = static_cast<double>(wavenumber(a, idx[a])) * wavenumber(a, idx[a]);
      for (int m = 1; m <= order; ++m) h[m] += x * h[m - 1];
    }
    const std::size_t il = idx[na - 1];
    const double weight = (il == 0 || 2 * static_cast<int>(il) == nlast) ? 1.0 : 2.0;
    const double re = c.p[s][0] * norm, im = c.p[s][1] * norm;
    total += weight * h[order] * (re * re + im * im);
  }
  return volume * total;
}

double Grid::mean(std::span<const double> f) const {
  double s = 0.0;
  for (double v : f) s += v;
  return s / static_cast<double>(f.size());
}

bool Field::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

double Field::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

void contract_frame(const Grid& grid, const Field& e, const double* grad, int I,
                    std::span<double> out) {
  const int D = grid.dim();
  const std::size_t np = grid.num_points();
  std::fill(out.begin(), out.end(), 0.0);
  for (int a = 0; a < grid.num_active(); ++a) {
    const double* ec = e.comp(I * D + grid.active_dims()[a]);
    const double* g = grad + static_cast<std::size_t>(a) * np;
    for (std::size_t p = 0; p < np; ++p) out[p] += ec[p] * g[p];
  }
}

Field frame_derivative(const Grid& grid, const Field& e, std::span<const double> f) {
  const int D = grid.dim();
  const std::size_t np = grid.num_points();
  std::vector<double> grad(static_cast<std::size_t>(grid.num_active()) * np);
  grid.gradient(f, 1, grad);
  Field out(D, np);
  for (int I = 0; I < D; ++I) contract_frame(grid, e, grad.data(), I, out.span(I));
  return out;
}

std::vector<double> frame_gradient(const Grid& grid, const Field& e, std::span<const double> f,
                                   int ncomp) {
  const int D = grid.dim();
  const int na = grid.num_active();
  const std::size_t np = grid.num_points();
  std::vector<double> grad(static_cast<std::size_t>(ncomp) * na * np);
  grid.gradient(f, ncomp, grad);
  std::vector<double> out(static_cast<std::size_t>(ncomp) * D * np);
#pragma omp parallel for num_threads(worker_threads()) schedule(static)
  for (int c = 0; c < ncomp; ++c)
    for (int I = 0; I < D; ++I)
      contract_frame(grid, e, grad.data() + static_cast<std::size_t>(c) * na * np, I,
                     {out.data() + (static_cast<std::size_t>(c) * D + I) * np, np});
  return out;
}

}  // namespace kasner
