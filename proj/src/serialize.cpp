#include "metricuq/serialize.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string_view>

#include <json.hpp>

namespace metricuq {

using nlohmann::json;

namespace {

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<int>(i)] = j[i].get<double>();
  return v;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    out.push_back(vector_to_json(m.row(r).transpose()));
  }
  return out;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const int rows = static_cast<int>(j.size());
  if (rows == 0) return Eigen::MatrixXd(0, 0);
  const int cols = static_cast<int>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(j[r].size()) != cols) {
      throw std::invalid_argument("ragged matrix in document");
    }
    for (int c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

json space_to_json(const SpaceDescriptor& space) {
  json out;
  out["kind"] = to_string(space.kind);
  out["dim"] = space.dim;
  out["d2"] = to_string(space.d2);
  if (space.bounds) {
    out["lower"] = space.bounds->first;
    out["upper"] = space.bounds->second;
  }
  if (space.kind == SpaceKind::laplacian) out["edge_bound"] = space.edge_bound;
  return out;
}

SpaceKind space_kind_from_string(const std::string& name) {
  if (name == "euclidean") return SpaceKind::euclidean;
  if (name == "wasserstein") return SpaceKind::wasserstein;
  if (name == "laplacian") return SpaceKind::laplacian;
  throw std::invalid_argument("unknown space kind '" + name + "'");
}

D2Choice d2_from_string(const std::string& name) {
  if (name == "same-as-d1") return D2Choice::same_as_d1;
  if (name == "sup-norm") return D2Choice::sup_norm;
  if (name == "frobenius") return D2Choice::frobenius;
  if (name == "euclidean") return D2Choice::euclidean;
  throw std::invalid_argument("unknown d2 choice '" + name + "'");
}

SpaceDescriptor space_from_json(const json& j) {
  SpaceDescriptor space;
  space.kind = space_kind_from_string(j.at("kind").get<std::string>());
  space.dim = j.at("dim").get<int>();
  space.d2 = d2_from_string(j.at("d2").get<std::string>());
  if (j.contains("lower")) {
    space.bounds = {j.at("lower").get<double>(), j.at("upper").get<double>()};
  }
  if (j.contains("edge_bound")) space.edge_bound = j.at("edge_bound").get<double>();
  validate_space(space);
  return space;
}

json sample_to_json(const ResidualSample& sample) {
  json out;
  out["predictors"] = matrix_to_json(sample.predictors);
  out["residuals"] = sample.residuals;
  out["tiebreaks"] = sample.tiebreaks;
  return out;
}

ResidualSample sample_from_json(const json& j) {
  ResidualSample sample;
  sample.predictors = matrix_from_json(j.at("predictors"));
  sample.residuals = j.at("residuals").get<std::vector<double>>();
  sample.tiebreaks = j.at("tiebreaks").get<std::vector<double>>();
  if (sample.residuals.size() != sample.tiebreaks.size() ||
      static_cast<int>(sample.residuals.size()) != sample.predictors.rows()) {
    throw std::invalid_argument("residual sample fields disagree on length");
  }
  return sample;
}

std::string convention_name(QuantileConvention convention) {
  return convention == QuantileConvention::conformal ? "conformal" : "plugin";
}

QuantileConvention convention_from_string(const std::string& name) {
  if (name == "conformal") return QuantileConvention::conformal;
  if (name == "plugin") return QuantileConvention::plugin;
  throw std::invalid_argument("unknown quantile convention '" + name + "'");
}

// +inf radii are stored as null (JSON has no infinity literal).
json radius_to_json(double radius) {
  if (std::isinf(radius)) return nullptr;
  return radius;
}

double radius_from_json(const json& j) {
  if (j.is_null()) return kInfiniteRadius;
  return j.get<double>();
}

}  // namespace

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path temp = path.string() + ".tmp";
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot open '" + temp.string() + "' for writing");
    }
    out << content;
    if (!out.flush()) {
      throw std::runtime_error("write to '" + temp.string() + "' failed");
    }
  }
  std::filesystem::rename(temp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open '" + path.string() + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string model_to_json(const GlobalFrechetModel& model) {
  json out;
  out["format"] = "metricuq-model";
  out["version"] = 1;
  out["space"] = space_to_json(model.space());
  out["predictor_mean"] = vector_to_json(model.predictor_mean());
  out["cov_inverse"] = matrix_to_json(model.cov_inverse());
  out["training_predictors"] = matrix_to_json(model.training_predictors());
  json responses = json::array();
  for (const MetricPoint& y : model.training_responses()) {
    responses.push_back(vector_to_json(flatten(y)));
  }
  out["responses"] = std::move(responses);
  return out.dump(1);
}

GlobalFrechetModel model_from_json(const std::string& text) {
  const json j = json::parse(text);
  if (j.at("format").get<std::string>() != "metricuq-model") {
    throw std::invalid_argument("not a model document");
  }
  const SpaceDescriptor space = space_from_json(j.at("space"));
  std::vector<MetricPoint> responses;
  for (const json& row : j.at("responses")) {
    responses.push_back(unflatten(vector_from_json(row), space));
  }
  // Refitting from the stored rows reproduces the mean and covariance
  // inverse bit-for-bit; the stored copies are informational.
  return GlobalFrechetModel::fit(matrix_from_json(j.at("training_predictors")),
                                 std::move(responses), space);
}

std::string region_to_json(const PredictionRegion& region,
                           const std::optional<std::string>& model_file) {
  json out;
  out["format"] = "metricuq-region";
  out["version"] = 1;
  out["alpha"] = region.alpha();
  out["space"] = space_to_json(region.space());
  if (model_file) out["model_file"] = *model_file;
  if (region.center_point()) {
    out["center"] = vector_to_json(flatten(*region.center_point()));
  }

  json rule;
  std::visit(
      [&](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, ConstantRadiusRule>) {
          rule["type"] = "constant";
          rule["radius"] = radius_to_json(r.radius);
        } else if constexpr (std::is_same_v<T, KnnRadiusRule>) {
          rule["type"] = "knn";
          rule["k"] = r.k;
          rule["alpha"] = r.alpha;
          rule["convention"] = convention_name(r.convention);
          rule["sample"] = sample_to_json(r.sample);
        } else {
          rule["type"] = "conformal_knn";
          rule["k"] = r.base.k;
          rule["alpha"] = r.base.alpha;
          rule["convention"] = convention_name(r.base.convention);
          rule["sample"] = sample_to_json(r.base.sample);
          rule["offset"] = radius_to_json(r.offset);
        }
      },
      region.rule());
  out["rule"] = std::move(rule);
  return out.dump(1);
}

SerializedRegion region_from_json(const std::string& text) {
  const json j = json::parse(text);
  if (j.at("format").get<std::string>() != "metricuq-region") {
    throw std::invalid_argument("not a region document");
  }
  SerializedRegion out;
  out.alpha = j.at("alpha").get<double>();
  out.space = space_from_json(j.at("space"));
  if (j.contains("model_file")) out.model_file = j.at("model_file").get<std::string>();
  if (j.contains("center")) out.center_coords = vector_from_json(j.at("center"));

  const json& rule = j.at("rule");
  const std::string type = rule.at("type").get<std::string>();
  if (type == "constant") {
    out.rule = ConstantRadiusRule{radius_from_json(rule.at("radius"))};
  } else if (type == "knn" || type == "conformal_knn") {
    KnnRadiusRule base;
    base.k = rule.at("k").get<int>();
    base.alpha = rule.at("alpha").get<double>();
    base.convention = convention_from_string(rule.at("convention").get<std::string>());
    base.sample = sample_from_json(rule.at("sample"));
    if (type == "knn") {
      out.rule = std::move(base);
    } else {
      out.rule = ConformalKnnRule{std::move(base),
                                  radius_from_json(rule.at("offset"))};
    }
  } else {
    throw std::invalid_argument("unknown radius rule '" + type + "'");
  }
  return out;
}

PredictionRegion assemble_region(const SerializedRegion& serialized,
                                 std::shared_ptr<const GlobalFrechetModel> model) {
  if (serialized.center_coords) {
    return PredictionRegion(
        unflatten(*serialized.center_coords, serialized.space), serialized.space,
        serialized.rule, serialized.alpha);
  }
  if (!model) {
    throw std::invalid_argument("region document needs its model to be loaded");
  }
  return PredictionRegion(std::move(model), serialized.rule, serialized.alpha);
}

CsvTable read_csv(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  CsvTable table;
  std::vector<std::vector<double>> rows;
  std::size_t line_start = 0;
  int line_number = 0;
  while (line_start < text.size()) {
    std::size_t line_end = text.find('\n', line_start);
    if (line_end == std::string::npos) line_end = text.size();
    std::string_view line(text.data() + line_start, line_end - line_start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_number;
    if (!line.empty()) {
      std::vector<std::string_view> fields;
      std::size_t field_start = 0;
      while (true) {
        const std::size_t comma = line.find(',', field_start);
        fields.push_back(line.substr(
            field_start,
            comma == std::string_view::npos ? line.size() - field_start
                                            : comma - field_start));
        if (comma == std::string_view::npos) break;
        field_start = comma + 1;
      }
      if (line_number == 1) {
        for (const auto& f : fields) table.header.emplace_back(f);
      } else {
        std::vector<double> row(fields.size());
        for (std::size_t i = 0; i < fields.size(); ++i) {
          const auto& f = fields[i];
          const auto [ptr, ec] =
              std::from_chars(f.data(), f.data() + f.size(), row[i]);
          if (ec != std::errc() || ptr != f.data() + f.size()) {
            throw std::invalid_argument("'" + path.string() + "' line " +
                                        std::to_string(line_number) +
                                        ": cannot parse '" + std::string(f) +
                                        "' as a number");
          }
        }
        rows.push_back(std::move(row));
      }
    }
    line_start = line_end + 1;
  }
  if (table.header.empty()) {
    throw std::invalid_argument("'" + path.string() + "' has no header row");
  }
  table.values.resize(static_cast<int>(rows.size()),
                      static_cast<int>(table.header.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != table.header.size()) {
      throw std::invalid_argument("'" + path.string() + "' row " +
                                  std::to_string(r + 2) + " has " +
                                  std::to_string(rows[r].size()) +
                                  " fields, header has " +
                                  std::to_string(table.header.size()));
    }
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      table.values(static_cast<int>(r), static_cast<int>(c)) = rows[r][c];
    }
  }
  return table;
}

std::string format_full_precision(double value) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, ptr);
}

std::string matrix_to_csv(const std::vector<std::string>& header,
                          const Eigen::MatrixXd& values) {
  std::ostringstream out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out << ',';
    out << header[i];
  }
  out << '\n';
  for (int r = 0; r < values.rows(); ++r) {
    for (int c = 0; c < values.cols(); ++c) {
      if (c) out << ',';
      out << format_full_precision(values(r, c));
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace metricuq
