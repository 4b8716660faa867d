#include "kraichnan/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "kraichnan/errors.hpp"

namespace kraichnan::io {

std::string format_double(double v) {
  if (!std::isfinite(v)) throw DomainError("format_double: non-finite value in output");
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out << content;
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

CsvWriter::CsvWriter(const std::vector<std::string>& header) : cols_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) buf_ += (i ? "," : "") + header[i];
  buf_ += '\n';
}

CsvWriter& CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != cols_) throw DomainError("CsvWriter: row width differs from header");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) buf_ += ',';
    buf_ += format_double(values[i]);
  }
  buf_ += '\n';
  return *this;
}

CsvWriter& CsvWriter::row_cells(const std::vector<std::string>& cells) {
  if (cells.size() != cols_) throw DomainError("CsvWriter: row width differs from header");
  for (std::size_t i = 0; i < cells.size(); ++i) buf_ += (i ? "," : "") + cells[i];
  buf_ += '\n';
  return *this;
}

std::string flux_csv(const flux::FluxTable& t) {
  CsvWriter w({"xi", "F", "residual", "K", "d", "alpha", "s", "m"});
  for (std::size_t i = 0; i < t.xi_values.size(); ++i)
    w.row({t.xi_values[i], t.F_values[i], t.residuals[i], t.K_used, double(t.params.d), t.params.alpha,
           t.params.s, t.params.m});
  return w.str();
}

namespace {

// tracker column name: the Sobolev index of the norm, H^{-s}
std::string tracker_name(double s) { return "norm_s" + format_double(s); }

}  // namespace

std::string trajectory_csv(const spectral::Trajectory& tr) {
  std::vector<std::string> header{"t", "mass"};
  for (double s : tr.trackers) header.push_back(tracker_name(s));
  header.push_back("boundary_fraction");
  CsvWriter w(header);
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    std::vector<double> row{tr.times[k], tr.mass[k]};
    for (const auto& n : tr.norms) row.push_back(n[k]);
    row.push_back(tr.boundary_fraction[k]);
    w.row(row);
  }
  return w.str();
}

std::string ensemble_csv(const mc::Lattice& lat, const std::vector<mc::EnsembleStats>& stats) {
  CsvWriter w({"t", "kx", "ky", "mean_sq", "std_err"});
  for (const auto& st : stats)
    for (std::size_t i = 0; i < lat.size(); ++i) {
      const int x = lat.kx_of(i), y = lat.ky_of(i);
      if (x == 0 && y == 0) continue;
      w.row({st.time, double(x), double(y), st.mean_sq[i], st.std_err[i]});
    }
  return w.str();
}

}  // namespace kraichnan::io
