#include "kasner/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace kasner {

namespace {

constexpr const char* kMagic = "kasner-snapshot 1";

std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint64_t r = 0;
  for (int b = 0; b < 8; ++b) r |= ((v >> (8 * b)) & 0xffu) << (8 * (7 - b));
  return r;
}

void put_doubles(std::ostream& out, std::span<const double> v) {
  std::vector<std::uint64_t> buf(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) buf[i] = to_little(std::bit_cast<std::uint64_t>(v[i]));
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(std::uint64_t)));
}

void get_doubles(std::istream& in, std::span<double> v) {
  std::vector<std::uint64_t> buf(v.size());
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(std::uint64_t)));
  if (!in) throw FormatError("snapshot payload is truncated");
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::bit_cast<double>(to_little(buf[i]));
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    if constexpr (std::is_floating_point_v<T>) s += format_double(v[i]);
    else s += std::to_string(v[i]);
  }
  return s;
}

double to_double(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw FormatError("bad number '" + s + "'");
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw FormatError("cannot write " + path.string());
}

struct PlotSpec {
  const char* name;
  const char* title;
  const char* ylabel;
  std::vector<std::string> columns;  // after t
  bool logy;
};

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

// Field list with component counts, e.g. "n:1,k:9,...".
std::string field_list(const ReducedState& s) {
  const std::pair<const char*, const Field*> fields[] = {
      {"n", &s.n}, {"k", &s.k}, {"gamma", &s.gamma}, {"e", &s.e},
      {"omega", &s.omega}, {"e0psi", &s.e0psi}, {"epsi", &s.epsi}};
  std::string out;
  for (const auto& [name, f] : fields) {
    if (!out.empty()) out += ',';
    out += std::string(name) + ':' + std::to_string(f->ncomp());
  }
  return out;
}

}  // namespace

void write_snapshot(const std::string& path, const ReducedState& s, const KasnerData& bg) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path + " for writing");
  const Grid& g = *s.grid;
  out << kMagic << '\n'
      << "dim=" << g.dim() << '\n'
      << "active_dims=" << join(g.active_dims()) << '\n'
      << "sizes=" << join(g.sizes()) << '\n'
      << "t=" << format_double(s.t) << '\n'
      << "q=" << join(bg.exponents) << '\n'
      << "B=" << format_double(bg.scalar_coeff) << '\n'
      << "fields=" << field_list(s) << '\n'
      << "end\n";
  for (const Field* f : {&s.n, &s.k, &s.gamma, &s.e, &s.omega, &s.e0psi, &s.epsi})
    put_doubles(out, f->all());
  if (!out) throw FormatError("failed writing " + path);
}

Snapshot read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != kMagic) throw FormatError(path + " is not a snapshot");
  int dim = 0;
  std::vector<int> active, sizes;
  double t = 0.0;
  KasnerData bg;
  std::string fields;
  while (std::getline(in, line) && line != "end") {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("malformed snapshot header line '" + line + "'");
    const std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    std::replace(value.begin(), value.end(), ',', ' ');
    std::istringstream ls(value);
    std::string tok;
    if (key == "dim") {
      ls >> dim;
    } else if (key == "active_dims") {
      while (ls >> tok) active.push_back(std::stoi(tok));
    } else if (key == "sizes") {
      while (ls >> tok) sizes.push_back(std::stoi(tok));
    } else if (key == "t") {
      ls >> tok;
      t = to_double(tok);
    } else if (key == "q") {
      while (ls >> tok) bg.exponents.push_back(to_double(tok));
    } else if (key == "B") {
      ls >> tok;
      bg.scalar_coeff = to_double(tok);
    } else if (key == "fields") {
      fields = line.substr(eq + 1);
    } else {
      throw FormatError("unknown snapshot header key '" + key + "'");
    }
  }
  if (line != "end" || dim < 1) throw FormatError("snapshot header is incomplete");
  bg.dim = dim;
  std::shared_ptr<const Grid> grid;
  try {
    grid = Grid::make(dim, active, sizes);
  } catch (const std::invalid_argument& ex) {
    throw FormatError(std::string("snapshot grid: ") + ex.what());
  }
  Snapshot snap{make_empty_state(grid, t), bg};
  ReducedState& s = snap.state;
  if (fields != field_list(s)) throw FormatError("snapshot field list '" + fields + "' does not match dim");
  for (Field* f : {&s.n, &s.k, &s.gamma, &s.e, &s.omega, &s.e0psi, &s.epsi})
    get_doubles(in, f->all());
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes in snapshot");
  return snap;
}

std::vector<std::string> csv_columns(bool with_u1) {
  std::vector<std::string> c = {
      "step", "t", "dtau", "lapse_iterations", "ham_sup", "ham_l2", "mom_sup", "mom_l2",
      "L_e_omega", "L_n", "L_gamma_k", "L_psi", "H_e_omega", "H_n", "H_gamma_k", "H_psi",
      "bandwidth_warning", "t4K_min", "t4K_max", "t4K_mean", "structure_sup", "ricci_sup",
      "cmc_residual", "duality_residual", "gamma_consistency", "k_symmetry",
      "gamma_antisymmetry", "lapse_min", "lapse_max"};
  if (with_u1)
    for (const char* n : {"x3_independence", "polarization", "gamma_distinct", "e3_tilt"})
      c.emplace_back(n);
  return c;
}

std::string csv_row(long step, double dtau, int lapse_iterations, const DiagnosticsRecord& r,
                    const std::optional<SymmetryReport>& sym) {
  std::string row = std::to_string(step);
  auto add = [&](double v) {
    row += ',';
    row += format_double(v);
  };
  add(r.t);
  add(dtau);
  row += ',' + std::to_string(lapse_iterations);
  for (double v : {r.ham_sup, r.ham_l2, r.mom_sup, r.mom_l2, r.norms.L_e_omega, r.norms.L_n,
                   r.norms.L_gamma_k, r.norms.L_psi, r.norms.H_e_omega, r.norms.H_n,
                   r.norms.H_gamma_k, r.norms.H_psi})
    add(v);
  row += r.norms.bandwidth_warning ? ",1" : ",0";
  for (double v : {r.kretschmann_t4.min, r.kretschmann_t4.max, r.kretschmann_t4.mean,
                   r.structure_sup, r.ricci_sup, r.cmc_residual, r.duality_residual,
                   r.gamma_consistency, r.k_symmetry, r.gamma_antisymmetry, r.lapse_min,
                   r.lapse_max})
    add(v);
  if (sym)
    for (double v : {sym->x3_independence, sym->polarization, sym->gamma_distinct, sym->e3_tilt})
      add(v);
  return row;
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw FormatError("CSV has no column '" + name + "'");
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  CsvTable table;
  std::string line;
  if (!std::getline(in, line) || line.empty()) throw FormatError(path + " is empty");
  table.header = split_csv(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != table.header.size())
      throw FormatError("line " + std::to_string(lineno) + " has the wrong number of cells");
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(to_double(c));
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::vector<std::string> write_plots(const CsvTable& table, const std::string& out_dir) {
  if (table.rows.empty()) throw FormatError("CSV has no data rows");
  const std::vector<PlotSpec> specs = {
      {"kretschmann", "t^4 K", "t^4 K", {"t4K_min", "t4K_mean", "t4K_max"}, false},
      {"constraints", "constraint residuals", "residual",
       {"ham_sup", "mom_sup", "ham_l2", "mom_l2"}, true},
      {"structure", "structure coefficients and Ricci", "sup",
       {"structure_sup", "ricci_sup"}, true},
      {"norms", "solution norms", "norm",
       {"L_e_omega", "L_gamma_k", "L_psi", "L_n", "H_e_omega", "H_gamma_k", "H_psi", "H_n"},
       true}};
  // Resolve every column before writing anything.
  const std::size_t tcol = table.column("t");
  std::vector<std::vector<std::size_t>> cols;
  for (const auto& s : specs) {
    std::vector<std::size_t> c{tcol};
    for (const auto& name : s.columns) c.push_back(table.column(name));
    cols.push_back(std::move(c));
  }

  std::filesystem::create_directories(out_dir);
  std::vector<std::string> scripts;
  for (std::size_t k = 0; k < specs.size(); ++k) {
    const PlotSpec& s = specs[k];
    const std::string dat = std::string(s.name) + ".dat";
    std::string data = "# t";
    for (const auto& name : s.columns) data += ' ' + name;
    data += '\n';
    for (const auto& row : table.rows) {
      for (std::size_t j = 0; j < cols[k].size(); ++j) {
        if (j) data += ' ';
        data += format_double(row[cols[k][j]]);
      }
      data += '\n';
    }
    write_text(std::filesystem::path(out_dir) / dat, data);

    std::string gp;
    gp += "set terminal pngcairo size 900,600\n";
    gp += "set output '" + std::string(s.name) + ".png'\n";
    gp += "set title '" + std::string(s.title) + "'\n";
    gp += "set xlabel 't'\nset ylabel '" + std::string(s.ylabel) + "'\n";
    gp += "set logscale x\nset format x '10^{%L}'\n";
    if (s.logy) gp += "set logscale y\n";
    gp += "set key outside right\n";
    gp += "plot ";
    for (std::size_t j = 0; j < s.columns.size(); ++j) {
      if (j) gp += ", \\\n     ";
      gp += "'" + dat + "' using 1:" + std::to_string(j + 2) + " with lines title '" +
            s.columns[j] + "'";
    }
    gp += '\n';
    const auto script = std::filesystem::path(out_dir) / (std::string(s.name) + ".gp");
    write_text(script, gp);
    scripts.push_back(script.string());
  }
  return scripts;
}

void Summary::add(const std::string& key, const std::string& value) {
  entries_.emplace_back(key, value);
}
void Summary::add(const std::string& key, double value) { add(key, format_double(value)); }
void Summary::add(const std::string& key, long value) { add(key, std::to_string(value)); }

void Summary::write(std::ostream& out) const {
  for (const auto& [k, v] : entries_) out << k << " = " << v << '\n';
}

void Summary::write(const std::string& path) const {
  std::ofstream out(path);
  write(out);
  if (!out) throw FormatError("cannot write " + path);
}

std::map<std::string, std::string> read_summary(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    out[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return out;
}

}  // namespace kasner
