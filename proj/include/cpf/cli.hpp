#pragma once

// Run configuration and subcommand drivers behind the `cpf` tool.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpf/graph.hpp"
#include "cpf/grid.hpp"
#include "cpf/student.hpp"
#include "cpf/synthetic.hpp"
#include "cpf/teacher.hpp"

namespace cpf::cli {

/// Invalid configuration; maps to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat key=value settings. Keys without a dot are run-level; dotted keys
/// belong to a section (split., teacher., student., synthetic.).
using Settings = std::map<std::string, std::string>;

/// Every recognized key with its default value.
Settings default_settings();

/// Sets a known key; throws ConfigError for unknown keys.
void set_setting(Settings& settings, const std::string& key, const std::string& value);

/// Applies a "key=value" assignment.
void apply_assignment(Settings& settings, const std::string& assignment);

/// Reads a config file of key=value lines ('#' starts a comment line).
/// Keys under "run." are informational and ignored.
void load_config_file(const std::filesystem::path& path, Settings& settings);

/// "5..10" or "5,7,9" (ranges and lists may be combined with commas).
std::vector<int> parse_int_list(const std::string& text);

enum class TeacherSource { builtin, file };

struct RunConfig {
  std::string command;
  std::filesystem::path dataset;
  std::filesystem::path out;
  TeacherSource teacher_source = TeacherSource::builtin;
  teacher::TeacherConfig teacher;
  std::filesystem::path teacher_file;
  std::vector<student::Variant> variants;
  std::vector<std::uint64_t> seeds;
  std::vector<int> ks;
  std::vector<Index> labeled_per_class;
  SplitRequest split;
  bool resplit = false;
  student::StudentHyperparams student;
  student::GridSpec grid;
  bool use_grid = false;
  int jobs = 1;
  Index top_k = 10;
  std::filesystem::path student_file;
  bool synthetic = false;
  SyntheticSpec synthetic_spec;
  std::vector<std::filesystem::path> runs;
  Settings settings;  // the resolved snapshot written to the manifest
};

/// Typed, validated view of `settings` for `command`. The output directory
/// defaults to $CPF_OUT/<command>, or runs/<command> without CPF_OUT.
RunConfig resolve(const std::string& command, const Settings& settings);

/// Writes manifest.cfg: every setting plus run.command, run.version and
/// run.wall_seconds. Loading it with --config re-executes the run.
void write_manifest(const RunConfig& config, double wall_seconds);

std::string version();

/// Subcommand drivers. Each writes its outputs and manifest under
/// config.out. Runtime failures propagate as exceptions.
void run_prepare(const RunConfig& config);
void run_train_teacher(const RunConfig& config);
void run_distill(const RunConfig& config);
void run_sweep_k(const RunConfig& config);
void run_sweep_labels(const RunConfig& config);
void run_explain(const RunConfig& config);
void run_report(const RunConfig& config);

/// Resolves, runs and writes the manifest; returns the process exit code
/// (0 success, 1 invalid config, 2 runtime failure) after printing errors to
/// standard error.
int run_command(const std::string& command, const Settings& settings);

}  // namespace cpf::cli
