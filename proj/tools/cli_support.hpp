#pragma once

#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include <Eigen/Core>

namespace emgpose::cli {

/// Tracks inputs and artifacts of one subcommand run and writes the manifest
/// that references them. Manifests contain no timestamps so identical runs
/// produce identical bytes.
class RunContext {
 public:
  RunContext(std::string subcommand, std::string outDir);

  /// Registers an artifact and returns its full path inside the output
  /// directory. Extra sidecar files belonging to the artifact are listed
  /// explicitly via note_output.
  std::string out_path(const std::string& name);
  void note_output(const std::string& name);
  void note_input(const std::string& path);
  void set_config(nlohmann::ordered_json config);

  const std::string& dir() const { return outDir_; }

  /// Writes <outDir>/manifest.json recording the tool version, subcommand,
  /// effective config, inputs, and every produced file.
  void write_manifest() const;

 private:
  std::string subcommand_;
  std::string outDir_;
  nlohmann::ordered_json config_;
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
};

/// Loads a JSON config file and rejects keys outside `allowedKeys`; an empty
/// path yields an empty object. The result must be a JSON object.
nlohmann::ordered_json load_config(const std::string& path,
                                   const std::vector<std::string>& allowedKeys);

/// Fills `out` from config key `key` when present, with type checking.
void merge_key(const nlohmann::ordered_json& config, const char* key, double& out);
void merge_key(const nlohmann::ordered_json& config, const char* key, int& out);
void merge_key(const nlohmann::ordered_json& config, const char* key, std::uint64_t& out);
void merge_key(const nlohmann::ordered_json& config, const char* key, bool& out);
void merge_key(const nlohmann::ordered_json& config, const char* key, std::string& out);
void merge_key(const nlohmann::ordered_json& config, const char* key, std::vector<int>& out);
void merge_key(const nlohmann::ordered_json& config, const char* key, std::vector<std::string>& out);

/// merge_key gated on flag precedence: a key the command line already set is
/// left alone, so flags override file values.
class ConfigMerger {
 public:
  ConfigMerger(const nlohmann::ordered_json& config, const std::set<std::string>& flagKeys)
      : config_(config), flagKeys_(flagKeys) {}

  template <typename T>
  void operator()(const char* key, T& out) const {
    if (flagKeys_.count(key) == 0) merge_key(config_, key, out);
  }

 private:
  const nlohmann::ordered_json& config_;
  const std::set<std::string>& flagKeys_;
};

/// Electrode subset of a 2 x 32 recording grid (row 0 proximal, row 1
/// distal; channel = row * 32 + col). Selections follow the comparative
/// montages: "32x2" keeps everything, "16x4" restacks the distal half of
/// each row as two further rows, "16x2" keeps alternate columns, and
/// "32x1-proximal" / "32x1-distal" keep a single row.
struct GridSelection {
  std::vector<int> channels;  // source channel per new channel, new-grid order
  int rows = 0;
  int cols = 0;
};

GridSelection grid_selection(const std::string& name, int gridRows, int gridCols);

/// Normalized angle series files: CSV with a time column and one column per
/// joint, suffix "_norm".
void save_norm_angles(const std::string& path, const Eigen::VectorXd& timestamps,
                      const Eigen::MatrixXd& anglesNorm);
struct NormAngleSeries {
  Eigen::VectorXd timestamps;
  Eigen::MatrixXd anglesNorm;
};
NormAngleSeries load_norm_angles(const std::string& path);

}  // namespace emgpose::cli
