#include "cli_support.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "emgpose/dataio.hpp"
#include "emgpose/errors.hpp"
#include "emgpose/kinematics.hpp"

#ifndef EMGPOSE_VERSION
#define EMGPOSE_VERSION "0.0.0"
#endif

namespace emgpose::cli {

RunContext::RunContext(std::string subcommand, std::string outDir)
    : subcommand_(std::move(subcommand)), outDir_(std::move(outDir)) {
  if (outDir_.empty()) throw ConfigError("output directory must not be empty");
  std::filesystem::create_directories(outDir_);
}

std::string RunContext::out_path(const std::string& name) {
  note_output(name);
  return (std::filesystem::path(outDir_) / name).string();
}

void RunContext::note_output(const std::string& name) {
  if (std::find(outputs_.begin(), outputs_.end(), name) == outputs_.end())
    outputs_.push_back(name);
}

void RunContext::note_input(const std::string& path) {
  if (std::find(inputs_.begin(), inputs_.end(), path) == inputs_.end())
    inputs_.push_back(path);
}

void RunContext::set_config(nlohmann::ordered_json config) { config_ = std::move(config); }

void RunContext::write_manifest() const {
  nlohmann::ordered_json manifest;
  manifest["tool"] = "emgpose";
  manifest["versions"] = {{"emgpose", EMGPOSE_VERSION}, {"modelFormat", 1}, {"manifestFormat", 1}};
  manifest["subcommand"] = subcommand_;
  manifest["config"] = config_;
  manifest["inputs"] = inputs_;
  std::vector<std::string> outputs = outputs_;
  outputs.push_back("manifest.json");
  manifest["outputs"] = outputs;

  const auto path = std::filesystem::path(outDir_) / "manifest.json";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write manifest: " + path.string());
  out << manifest.dump(2) << "\n";
}

nlohmann::ordered_json load_config(const std::string& path,
                                   const std::vector<std::string>& allowedKeys) {
  if (path.empty()) return nlohmann::ordered_json::object();
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::ordered_json config;
  try {
    config = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
  if (!config.is_object()) throw ConfigError("config file must hold a JSON object");
  for (const auto& [key, value] : config.items()) {
    (void)value;
    if (std::find(allowedKeys.begin(), allowedKeys.end(), key) == allowedKeys.end())
      throw ConfigError("unknown config key \"" + key + "\" in " + path);
  }
  return config;
}

namespace {

const nlohmann::ordered_json* find_key(const nlohmann::ordered_json& config, const char* key) {
  const auto it = config.find(key);
  return it == config.end() ? nullptr : &*it;
}

[[noreturn]] void type_error(const char* key, const char* expected) {
  throw ConfigError(std::string("config key \"") + key + "\" must be " + expected);
}

}  // namespace

void merge_key(const nlohmann::ordered_json& config, const char* key, double& out) {
  if (const auto* v = find_key(config, key)) {
    if (!v->is_number()) type_error(key, "a number");
    out = v->get<double>();
  }
}

void merge_key(const nlohmann::ordered_json& config, const char* key, int& out) {
  if (const auto* v = find_key(config, key)) {
    if (!v->is_number_integer()) type_error(key, "an integer");
    out = v->get<int>();
  }
}

void merge_key(const nlohmann::ordered_json& config, const char* key, std::uint64_t& out) {
  if (const auto* v = find_key(config, key)) {
    if (!v->is_number_unsigned() && !v->is_number_integer()) type_error(key, "an integer");
    if (v->is_number_integer() && v->get<std::int64_t>() < 0)
      type_error(key, "a non-negative integer");
    out = v->get<std::uint64_t>();
  }
}

void merge_key(const nlohmann::ordered_json& config, const char* key, bool& out) {
  if (const auto* v = find_key(config, key)) {
    if (!v->is_boolean()) type_error(key, "a boolean");
    out = v->get<bool>();
  }
}

void merge_key(const nlohmann::ordered_json& config, const char* key, std::string& out) {
  if (const auto* v = find_key(config, key)) {
    if (!v->is_string()) type_error(key, "a string");
    out = v->get<std::string>();
  }
}

void merge_key(const nlohmann::ordered_json& config, const char* key, std::vector<int>& out) {
  if (const auto* v = find_key(config, key)) {
    if (!v->is_array()) type_error(key, "an array of integers");
    out.clear();
    for (const auto& e : *v) {
      if (!e.is_number_integer()) type_error(key, "an array of integers");
      out.push_back(e.get<int>());
    }
  }
}

void merge_key(const nlohmann::ordered_json& config, const char* key, std::vector<std::string>& out) {
  if (const auto* v = find_key(config, key)) {
    if (!v->is_array()) type_error(key, "an array of strings");
    out.clear();
    for (const auto& e : *v) {
      if (!e.is_string()) type_error(key, "an array of strings");
      out.push_back(e.get<std::string>());
    }
  }
}

GridSelection grid_selection(const std::string& name, int gridRows, int gridCols) {
  if (name == "full") {
    GridSelection sel;
    sel.rows = gridRows;
    sel.cols = gridCols;
    for (int ch = 0; ch < gridRows * gridCols; ++ch) sel.channels.push_back(ch);
    return sel;
  }
  if (gridRows != 2 || gridCols != 32)
    throw ConfigError("grid selection \"" + name + "\" needs a 2 x 32 source grid");

  GridSelection sel;
  const auto source = [](int row, int col) { return row * 32 + col; };
  if (name == "32x2") {
    sel.rows = 2;
    sel.cols = 32;
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 32; ++c) sel.channels.push_back(source(r, c));
  } else if (name == "16x4") {
    sel.rows = 4;
    sel.cols = 16;
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 16; ++c) sel.channels.push_back(source(r % 2, c + 16 * (r / 2)));
  } else if (name == "16x2") {
    sel.rows = 2;
    sel.cols = 16;
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 16; ++c) sel.channels.push_back(source(r, 2 * c));
  } else if (name == "32x1-proximal") {
    sel.rows = 1;
    sel.cols = 32;
    for (int c = 0; c < 32; ++c) sel.channels.push_back(source(0, c));
  } else if (name == "32x1-distal") {
    sel.rows = 1;
    sel.cols = 32;
    for (int c = 0; c < 32; ++c) sel.channels.push_back(source(1, c));
  } else {
    throw ConfigError("unknown grid selection \"" + name +
                      "\" (use 32x2, 16x4, 16x2, 32x1-proximal, 32x1-distal, or full)");
  }
  return sel;
}

void save_norm_angles(const std::string& path, const Eigen::VectorXd& timestamps,
                      const Eigen::MatrixXd& anglesNorm) {
  if (anglesNorm.cols() != static_cast<Eigen::Index>(kin::kNumJoints))
    throw DataError("normalized angle series must have 29 columns");
  if (anglesNorm.rows() != timestamps.size())
    throw DataError("timestamp and angle row counts differ");
  std::vector<std::string> header = {"t"};
  for (const auto& name : kin::joint_names()) header.push_back(name + "_norm");
  Eigen::MatrixXd values(anglesNorm.rows(), anglesNorm.cols() + 1);
  values.col(0) = timestamps;
  values.rightCols(anglesNorm.cols()) = anglesNorm;
  dataio::write_csv(path, header, values);
}

NormAngleSeries load_norm_angles(const std::string& path) {
  const dataio::CsvTable table = dataio::read_csv(path);
  std::vector<std::string> expected = {"t"};
  for (const auto& name : kin::joint_names()) expected.push_back(name + "_norm");
  if (table.header != expected)
    throw DataError("unexpected normalized angle header in " + path);
  NormAngleSeries series;
  series.timestamps = table.values.col(0);
  series.anglesNorm = table.values.rightCols(table.values.cols() - 1);
  return series;
}

}  // namespace emgpose::cli
