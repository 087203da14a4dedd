#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "metricuq/frechet.hpp"
#include "metricuq/regions.hpp"
#include "metricuq/space.hpp"

namespace metricuq {

// Writes to a temporary sibling file and renames into place, so failed
// commands never leave partial output behind.
void atomic_write(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

// JSON documents
std::string model_to_json(const GlobalFrechetModel& model);
GlobalFrechetModel model_from_json(const std::string& text);

// Regions reference their model by file path; loading needs the referenced
// model (already loaded by the caller) unless the region stores a fixed
// center point.
struct SerializedRegion {
  double alpha = 0.0;
  SpaceDescriptor space;
  std::optional<std::string> model_file;
  std::optional<Eigen::VectorXd> center_coords;
  RadiusRule rule{ConstantRadiusRule{}};
};

std::string region_to_json(const PredictionRegion& region,
                           const std::optional<std::string>& model_file);
SerializedRegion region_from_json(const std::string& text);

PredictionRegion assemble_region(const SerializedRegion& serialized,
                                 std::shared_ptr<const GlobalFrechetModel> model);

// CSV: first row is a header, remaining rows are numeric.
struct CsvTable {
  std::vector<std::string> header;
  Eigen::MatrixXd values;
};

CsvTable read_csv(const std::filesystem::path& path);
std::string matrix_to_csv(const std::vector<std::string>& header,
                          const Eigen::MatrixXd& values);

// Shortest round-trip decimal rendering.
std::string format_full_precision(double value);

}  // namespace metricuq
