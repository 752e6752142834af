#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kasner/diagnostics.hpp"
#include "kasner/state.hpp"
#include "kasner/u1_polarized.hpp"

namespace kasner {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A state together with the background it perturbs.
struct Snapshot {
  ReducedState state;
  KasnerData background;
};

/// Text header (grid, time, background) followed by the fields n, k, gamma,
/// e, omega, e0psi, epsi as little-endian IEEE doubles. Reading back gives
/// bitwise-identical buffers. Throws FormatError on I/O or format problems.
void write_snapshot(const std::string& path, const ReducedState& state,
                    const KasnerData& background);
Snapshot read_snapshot(const std::string& path);

/// Column names of the diagnostics CSV, u1 monitors appended when requested.
std::vector<std::string> csv_columns(bool with_u1);

/// One CSV row (17 significant digits, no trailing newline).
std::string csv_row(long step, double dtau, int lapse_iterations, const DiagnosticsRecord& rec,
                    const std::optional<SymmetryReport>& sym);

/// Parsed CSV: header plus numeric rows. Throws FormatError.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Column index; throws FormatError if absent.
  std::size_t column(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);

/// Writes kretschmann, constraints, structure and norms gnuplot scripts
/// (.gp) with their data files (.dat) into `out_dir`. Returns the script
/// paths. Throws FormatError if the table is empty or lacks columns.
std::vector<std::string> write_plots(const CsvTable& table, const std::string& out_dir);

/// "%.17g".
std::string format_double(double v);

/// key = value lines, in insertion order.
class Summary {
 public:
  void add(const std::string& key, const std::string& value);
  void add(const std::string& key, double value);
  void add(const std::string& key, long value);
  void write(std::ostream& out) const;
  void write(const std::string& path) const;
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// Reads key = value lines back into a map.
std::map<std::string, std::string> read_summary(const std::string& path);

}  // namespace kasner
