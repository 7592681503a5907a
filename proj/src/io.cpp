#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <unistd.h>
#include <yaml-cpp/yaml.h>

#include "spr/io.hpp"

namespace spr {

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." +
         std::to_string(std::hash<std::string>{}(content) & 0xffffff);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error("cannot rename onto " + path.string() + ": " + ec.message());
  }
}

std::string format_number(double v) {
  if (std::isnan(v)) throw std::domain_error("format_number: NaN in output");
  if (v <= kMinusInfDb) return "-inf";
  if (std::isinf(v)) throw std::domain_error("format_number: +inf in output");
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("format_number: conversion failed");
  return std::string(buf, end);
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add_row(std::vector<std::string> cells) {
  if (cells.size() != header_.size())
    throw std::invalid_argument("CsvTable: row width differs from header");
  rows_.push_back(std::move(cells));
}

std::string CsvTable::str() const {
  std::ostringstream os;
  auto line = [&os](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
    os << '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return os.str();
}

CsvTable spectrum_csv(const CxVector& c) {
  CsvTable t({"bin", "magnitude", "db"});
  const double peak = c.size() ? c.cwiseAbs().maxCoeff() : 0.0;
  for (Eigen::Index k = 0; k < c.size(); ++k) {
    const double mag = std::abs(c(k));
    const double db = peak > 0.0 ? to_db_amplitude(mag / peak) : kMinusInfDb;
    t.add_row({std::to_string(k), format_number(mag), format_number(db)});
  }
  return t;
}

CsvTable trace_csv(const IterTrace& trace) {
  CsvTable t({"iter", "residue_db", "sigma_n", "gamma", "cond_H"});
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const double cond = trace.cond_H[i];
    t.add_row({std::to_string(i + 1), format_number(trace.residue_db[i]),
               format_number(trace.sigma_n_est[i]), format_number(trace.gamma_est[i]),
               std::isfinite(cond) ? format_number(cond) : "-inf"});
  }
  return t;
}

namespace {

nlohmann::json finite_array(const std::vector<double>& v) {
  auto out = nlohmann::json::array();
  for (double x : v) out.push_back(std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr));
  return out;
}

}  // namespace

nlohmann::json to_json(const SolveResult& result) {
  nlohmann::json j;
  j["method"] = std::string(to_string(result.method));
  j["termination"] = std::string(to_string(result.termination));
  j["iterations"] = result.iterations();
  auto c = nlohmann::json::array();
  for (Eigen::Index k = 0; k < result.c_hat.size(); ++k) {
    c.push_back(result.c_hat(k).real());
    c.push_back(result.c_hat(k).imag());
  }
  j["c_hat"] = std::move(c);
  j["support"] = result.support;
  j["sigma_n"] = result.sigma_n;
  j["gamma"] = result.gamma;
  j["trace"] = {{"residue_db", finite_array(result.trace.residue_db)},
                {"sigma_n", finite_array(result.trace.sigma_n_est)},
                {"gamma", finite_array(result.trace.gamma_est)},
                {"tau_min", finite_array(result.trace.tau_min)},
                {"tau_max", finite_array(result.trace.tau_max)},
                {"cond_H", finite_array(result.trace.cond_H)}};
  if (result.ill_conditioned_at) {
    j["ill_conditioned_at"] = *result.ill_conditioned_at;
    j["ill_conditioned_cond"] =
        std::isfinite(result.ill_conditioned_cond) ? nlohmann::json(result.ill_conditioned_cond)
                                                   : nlohmann::json(nullptr);
  }
  j["events"] = result.events;
  return j;
}

CsvTable image_csv(const RangeAzimuthImage& image) {
  std::vector<std::string> header{"range_m"};
  for (Eigen::Index j = 0; j < image.angle_axis_deg.size(); ++j)
    header.push_back(format_number(image.angle_axis_deg(j)));
  CsvTable t(std::move(header));
  for (Eigen::Index p = 0; p < image.magnitudes_db.rows(); ++p) {
    std::vector<std::string> row{format_number(image.range_axis_m(p))};
    for (Eigen::Index j = 0; j < image.magnitudes_db.cols(); ++j)
      row.push_back(format_number(image.magnitudes_db(p, j)));
    t.add_row(std::move(row));
  }
  return t;
}

nlohmann::json image_axes_json(const RangeAzimuthImage& image) {
  nlohmann::json j;
  j["solver"] = image.solver_used;
  j["dynamic_range_db"] = image.dynamic_range_db;
  j["range_axis_m"] = std::vector<double>(image.range_axis_m.begin(), image.range_axis_m.end());
  j["angle_axis_deg"] =
      std::vector<double>(image.angle_axis_deg.begin(), image.angle_axis_deg.end());
  j["column_bin"] = image.column_bin;
  j["selected_bins"] = image.selected_bins;
  j["failed_bins"] = image.failed_bins;
  return j;
}

std::string image_pgm(const RangeAzimuthImage& image) {
  const auto rows = image.magnitudes_db.rows();
  const auto cols = image.magnitudes_db.cols();
  std::string out = "P5\n" + std::to_string(cols) + " " + std::to_string(rows) + "\n255\n";
  // Farthest range on top.
  for (Eigen::Index p = rows - 1; p >= 0; --p)
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double t = 1.0 + image.magnitudes_db(p, j) / image.dynamic_range_db;
      out.push_back(static_cast<char>(std::lround(255.0 * std::clamp(t, 0.0, 1.0))));
    }
  return out;
}

namespace {

double req_double(const YAML::Node& node, const char* key, const std::string& where) {
  if (!node[key]) throw std::invalid_argument(where + ": missing field '" + key + "'");
  try {
    return node[key].as<double>();
  } catch (const YAML::Exception&) {
    throw std::invalid_argument(where + ": field '" + key + "' is not a number");
  }
}

Cx parse_amp(const YAML::Node& node, const std::string& where) {
  if (!node) return {1.0, 0.0};
  try {
    if (node.IsSequence()) {
      if (node.size() != 2) throw std::invalid_argument(where + ": amp pair needs two entries");
      return {node[0].as<double>(), node[1].as<double>()};
    }
    return {node.as<double>(), 0.0};
  } catch (const YAML::Exception&) {
    throw std::invalid_argument(where + ": field 'amp' is malformed");
  }
}

}  // namespace

std::vector<PointScatterer> load_scene(const std::filesystem::path& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::Exception& e) {
    throw std::invalid_argument("scene " + path.string() + ": " + e.what());
  }
  std::vector<PointScatterer> scene;
  if (const auto grid = root["grid"]) {
    const std::string where = "scene grid";
    if (!grid["ranges_m"] || !grid["angles_deg"])
      throw std::invalid_argument(where + ": needs 'ranges_m' and 'angles_deg'");
    const double a0 = grid["a0"] ? grid["a0"].as<double>() : 65.0;
    scene = reflector_grid(grid["ranges_m"].as<std::vector<double>>(),
                           grid["angles_deg"].as<std::vector<double>>(), a0);
  }
  if (const auto list = root["scatterers"]) {
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string where = "scatterers[" + std::to_string(i) + "]";
      const auto node = list[i];
      scene.push_back({req_double(node, "range_m", where), req_double(node, "angle_deg", where),
                       parse_amp(node["amp"], where)});
    }
  }
  if (scene.empty()) throw std::invalid_argument("scene " + path.string() + " has no scatterers");
  return scene;
}

std::string scene_yaml(const std::vector<PointScatterer>& scene) {
  YAML::Emitter out;
  out << YAML::BeginMap << YAML::Key << "scatterers" << YAML::Value << YAML::BeginSeq;
  for (const auto& s : scene) {
    out << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "range_m" << YAML::Value << s.range_m;
    out << YAML::Key << "angle_deg" << YAML::Value << s.angle_deg;
    out << YAML::Key << "amp" << YAML::Value << YAML::Flow << YAML::BeginSeq << s.amplitude.real()
        << s.amplitude.imag() << YAML::EndSeq;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace spr
