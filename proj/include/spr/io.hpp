#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spr/linalg.hpp"
#include "spr/radar.hpp"
#include "spr/solvers.hpp"

namespace spr {

/// Writes to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Shortest round-trip text; values at or below kMinusInfDb print as "-inf".
std::string format_number(double v);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  void add_row(std::vector<std::string> cells);
  std::size_t rows() const { return rows_.size(); }
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

CsvTable spectrum_csv(const CxVector& c);
CsvTable trace_csv(const IterTrace& trace);
nlohmann::json to_json(const SolveResult& result);

CsvTable image_csv(const RangeAzimuthImage& image);
nlohmann::json image_axes_json(const RangeAzimuthImage& image);
/// Binary PGM, 0 at the dynamic-range floor and 255 at the image maximum.
std::string image_pgm(const RangeAzimuthImage& image);

/// Scene file: a `scatterers` list of {range_m, angle_deg, amp} where amp is
/// a number or a [re, im] pair, and/or a `grid` block {ranges_m, angles_deg,
/// a0} expanded with |a| = a0 / range.
std::vector<PointScatterer> load_scene(const std::filesystem::path& path);
std::string scene_yaml(const std::vector<PointScatterer>& scene);

}  // namespace spr
