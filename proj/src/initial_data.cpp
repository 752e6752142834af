#include "kasner/initial_data.hpp"

#include <Eigen/Dense>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "kasner/diagnostics.hpp"

namespace kasner {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i)
    if (i == s.size() || s[i] == sep) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  return out;
}

double parse_double(std::string_view s) {
  const std::string str(s);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(str, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != str.size() || !std::isfinite(v))
    throw std::invalid_argument("bad number '" + str + "' in profile");
  return v;
}

int parse_int(std::string_view s) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw std::invalid_argument("bad wavenumber '" + std::string(s) + "' in profile");
  return v;
}

void check_index(int i, int D, const char* what) {
  if (i < 0 || i >= D)
    throw InitialDataError(std::string(what) + " index " + std::to_string(i + 1) +
                           " out of range");
}

}  // namespace

Profile parse_profile(std::string_view text) {
  Profile p;
  for (std::string_view term : split(text, ';')) {
    if (term.empty()) continue;
    const auto parts = split(term, ',');
    if (parts.size() < 3 || parts.size() > 5)
      throw std::invalid_argument("profile term '" + std::string(term) +
                                  "' must be amp,cos|sin,m1[,m2[,m3]]");
    Mode m;
    m.amp = parse_double(parts[0]);
    if (parts[1] == "sin") {
      m.sine = true;
    } else if (parts[1] != "cos") {
      throw std::invalid_argument("profile term type must be cos or sin, got '" +
                                  std::string(parts[1]) + "'");
    }
    for (std::size_t i = 2; i < parts.size(); ++i) m.m.push_back(parse_int(parts[i]));
    p.modes.push_back(std::move(m));
  }
  return p;
}

std::string format_profile(const Profile& profile) {
  std::string out;
  char buf[64];
  for (std::size_t i = 0; i < profile.modes.size(); ++i) {
    const Mode& m = profile.modes[i];
    if (i) out += ';';
    std::snprintf(buf, sizeof buf, "%.17g", m.amp);
    out += buf;
    out += m.sine ? ",sin" : ",cos";
    for (int w : m.m) out += "," + std::to_string(w);
  }
  return out;
}

std::vector<double> sample_profile(const Grid& grid, const Profile& profile) {
  const std::size_t np = grid.num_points();
  const int na = grid.num_active();
  std::vector<double> out(np, 0.0);
  for (const Mode& m : profile.modes) {
    if (static_cast<int>(m.m.size()) > na)
      throw std::invalid_argument("profile term has more wavenumbers than active axes");
    for (std::size_t p = 0; p < np; ++p) {
      double phase = 0.0;
      for (std::size_t a = 0; a < m.m.size(); ++a)
        phase += m.m[a] * grid.coordinate(static_cast<int>(a), p);
      out[p] += m.amp * (m.sine ? std::sin(phase) : std::cos(phase));
    }
  }
  return out;
}

namespace {

ReducedState frame_state(std::shared_ptr<const Grid> grid, const Field& g, const Field& k,
                         bool u1_frame) {
  const Grid& gr = *grid;
  const int D = gr.dim();
  const std::size_t np = gr.num_points();
  const FramePair frame = u1_frame ? gram_schmidt_frame_u1(gr, g) : gram_schmidt_frame(gr, g);
  ReducedState s = make_empty_state(std::move(grid), 1.0);
  s.e = frame.e;
  s.omega = frame.omega;
  s.gamma = koszul_gamma(gr, frame);
  for (int I = 0; I < D; ++I)
    for (int J = 0; J < D; ++J)
      for (std::size_t p = 0; p < np; ++p) {
        double v = 0.0;
        for (int i = 0; i < D; ++i)
          for (int j = 0; j < D; ++j)
            v += s.e(idx2(D, I, i), p) * s.e(idx2(D, J, j), p) * k(idx2(D, i, j), p);
        s.k(idx2(D, I, J), p) = v;
      }
  return s;
}

CoordinateData build_scalar1d(const std::shared_ptr<const Grid>& grid_ptr, const KasnerData& bg,
                              const PerturbationSpec& spec) {
  const Grid& grid = *grid_ptr;
  const int D = grid.dim();
  const std::size_t np = grid.num_points();
  if (!(bg.scalar_coeff > 0.0))
    throw InitialDataError("x^1-dependent scalar data need a background with B > 0");
  if (!spec.xi.empty() || !spec.g.empty() || !spec.k.empty() || !spec.psi.empty() ||
      !spec.phi.empty())
    throw InitialDataError("scalar1d perturbations cannot be combined with other perturbations");
  if (grid.axis_of(0) != 0) throw InitialDataError("scalar1d data need x^1 to be active");
  auto check_profile = [&](const std::map<int, Profile>& m, const char* what) {
    for (const auto& [I, prof] : m) {
      if (I < 1 || I >= D)
        throw InitialDataError(std::string(what) + " index must be in 2.." + std::to_string(D));
      for (const Mode& mode : prof.modes)
        for (std::size_t a = 1; a < mode.m.size(); ++a)
          if (mode.m[a] != 0)
            throw InitialDataError(std::string(what) + " profiles may depend on x^1 only");
    }
  };
  check_profile(spec.beta, "beta");
  check_profile(spec.kappa, "kappa");

  CoordinateData data;
  data.g = Field(D * D, np);
  data.k = Field(D * D, np);
  std::vector<std::vector<double>> beta(D, std::vector<double>(np, 0.0));
  std::vector<std::vector<double>> K(D, std::vector<double>(np, 0.0));
  for (const auto& [I, prof] : spec.beta) beta[I] = sample_profile(grid, prof);
  for (int I = 1; I < D; ++I) {
    const auto it = spec.kappa.find(I);
    const std::vector<double> kap =
        it == spec.kappa.end() ? std::vector<double>(np, 0.0) : sample_profile(grid, it->second);
    for (std::size_t p = 0; p < np; ++p) K[I][p] = -bg.exponents[I] + kap[p];
  }
  for (std::size_t p = 0; p < np; ++p) {
    double rest = 0.0;
    for (int I = 1; I < D; ++I) rest += K[I][p];
    K[0][p] = -1.0 - rest;
    for (int I = 0; I < D; ++I) {
      const double s2 = std::exp(2.0 * beta[I][p]);
      data.g(idx2(D, I, I), p) = s2;
      data.k(idx2(D, I, I), p) = K[I][p] * s2;
    }
  }

  // Geometric parts of the constraints with the scalar field switched off.
  const ReducedState s = frame_state(grid_ptr, data.g, data.k, false);
  const Field H = hamiltonian_residual(s);
  const Field M = momentum_residual(s);
  for (int I = 1; I < D; ++I)
    for (std::size_t p = 0; p < np; ++p)
      if (std::abs(M(I, p)) > 1e-10)
        throw InitialDataError("unexpected transverse momentum residual");

  data.phi.resize(np);
  data.epsi = Field(D, np);
  for (std::size_t p = 0; p < np; ++p) {
    const double h = H(0, p), m = std::abs(M(0, p));
    if (!(h - 2.0 * m >= 0.0))
      throw InitialDataError("scalar field cannot absorb the constraint residual "
                             "(perturbation too large)");
    const double u = 0.5 * (std::sqrt(h + 2.0 * m) + std::sqrt(h - 2.0 * m));
    data.phi[p] = u;
    data.epsi(0, p) = -M(0, p) / u;
  }
  data.psi.resize(np);
  grid.antiderivative(data.epsi.span(0), 0, data.psi);
  return data;
}

}  // namespace

CoordinateData build_coordinate_data(const std::shared_ptr<const Grid>& grid_ptr,
                                     const KasnerData& bg, const PerturbationSpec& spec) {
  const Grid& grid = *grid_ptr;
  const int D = grid.dim();
  const std::size_t np = grid.num_points();
  if (bg.dim != D || static_cast<int>(bg.exponents.size()) != D)
    throw InitialDataError("background dimension differs from grid dimension");
  if (spec.is_scalar1d()) return build_scalar1d(grid_ptr, bg, spec);

  CoordinateData data;
  data.g = Field(D * D, np);
  data.k = Field(D * D, np);

  std::vector<std::vector<double>> dxi;  // [a*D + i] = d_i xi^a
  if (!spec.xi.empty()) {
    dxi.assign(static_cast<std::size_t>(D) * D, std::vector<double>(np, 0.0));
    for (const auto& [a, prof] : spec.xi) {
      check_index(a, D, "xi");
      const auto xi = sample_profile(grid, prof);
      for (int i = 0; i < D; ++i) grid.partial(xi, i, dxi[a * D + i], false);
    }
  }
  Eigen::MatrixXd J(D, D);
  for (std::size_t p = 0; p < np; ++p) {
    for (int a = 0; a < D; ++a)
      for (int i = 0; i < D; ++i) J(a, i) = (a == i ? 1.0 : 0.0) + (dxi.empty() ? 0.0 : dxi[a * D + i][p]);
    if (!dxi.empty() && !(J.determinant() > 0.0))
      throw InitialDataError("gauge displacement is not a diffeomorphism at point " +
                             std::to_string(p));
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) {
        double gv = 0.0, kv = 0.0;
        for (int a = 0; a < D; ++a) {
          gv += J(a, i) * J(a, j);
          kv -= bg.exponents[a] * J(a, i) * J(a, j);
        }
        data.g(idx2(D, i, j), p) = gv;
        data.k(idx2(D, i, j), p) = kv;
      }
  }

  auto add_sym = [&](Field& f, const std::map<std::pair<int, int>, Profile>& m, const char* what) {
    for (const auto& [ij, prof] : m) {
      const auto [i, j] = ij;
      check_index(i, D, what);
      check_index(j, D, what);
      if (i > j) throw InitialDataError(std::string(what) + " keys must have i <= j");
      const auto v = sample_profile(grid, prof);
      for (std::size_t p = 0; p < np; ++p) {
        f(idx2(D, i, j), p) += v[p];
        if (i != j) f(idx2(D, j, i), p) += v[p];
      }
    }
  };
  add_sym(data.g, spec.g, "g");
  add_sym(data.k, spec.k, "k");

  if (!spec.g.empty() || !spec.k.empty()) {
    Eigen::MatrixXd G(D, D), Kc(D, D);
    for (std::size_t p = 0; p < np; ++p) {
      for (int i = 0; i < D; ++i)
        for (int j = 0; j < D; ++j) {
          G(i, j) = data.g(idx2(D, i, j), p);
          Kc(i, j) = data.k(idx2(D, i, j), p);
        }
      const double tr = G.ldlt().solve(Kc).trace();
      const double shift = (-1.0 - tr) / D;
      for (int c = 0; c < D * D; ++c) data.k(c, p) += shift * data.g(c, p);
    }
  }

  data.psi = spec.psi.empty() ? std::vector<double>(np, 0.0) : sample_profile(grid, spec.psi);
  data.phi = spec.phi.empty() ? std::vector<double>(np, 0.0) : sample_profile(grid, spec.phi);
  for (double& v : data.phi) v += bg.scalar_coeff;
  return data;
}

ReducedState reduce_initial_data(std::shared_ptr<const Grid> grid, const CoordinateData& data,
                                 const LapseSolveConfig& lapse, bool u1_frame) {
  const Grid& gr = *grid;
  const std::size_t np = gr.num_points();
  ReducedState s = frame_state(grid, data.g, data.k, u1_frame);
  if (!data.epsi.empty()) {
    s.epsi = data.epsi;
  } else {
    s.epsi = frame_derivative(gr, s.e, data.psi);
  }
  for (std::size_t p = 0; p < np; ++p) s.e0psi(0, p) = data.phi[p];
  LapseResult r = solve_lapse(s, lapse);
  s.n = std::move(r.n);
  return s;
}

}  // namespace kasner
