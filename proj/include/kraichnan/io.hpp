#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "kraichnan/flux.hpp"
#include "kraichnan/mc_spde.hpp"
#include "kraichnan/spectral.hpp"

namespace kraichnan::io {

// shortest decimal that parses back to the same double
std::string format_double(double v);

// write to a sibling temp file, then rename over the target
void write_atomic(const std::filesystem::path& path, const std::string& content);

class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header);
  CsvWriter& row(const std::vector<double>& values);
  // pre-formatted cells; an empty string leaves the field blank
  CsvWriter& row_cells(const std::vector<std::string>& cells);
  const std::string& str() const { return buf_; }

 private:
  std::size_t cols_;
  std::string buf_;
};

std::string flux_csv(const flux::FluxTable& t);
std::string trajectory_csv(const spectral::Trajectory& tr);
std::string ensemble_csv(const mc::Lattice& lat, const std::vector<mc::EnsembleStats>& stats);

}  // namespace kraichnan::io
