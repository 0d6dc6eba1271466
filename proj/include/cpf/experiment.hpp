#pragma once

// Experiment drivers (K sweep, labeled-ratio sweep), interpretability probes
// over the learned balance and confidence scores, and their output files.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cpf/student.hpp"
#include "cpf/teacher.hpp"

namespace cpf {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for fewer than 2 values
};

MeanStd mean_std(std::span<const double> values);

/// Flat key/value records, written as report.tsv.
using Report = std::vector<std::pair<std::string, std::string>>;

void write_report(const std::filesystem::path& path, const Report& report);
Report read_report(const std::filesystem::path& path);

/// One configuration of a sweep.
struct SweepRow {
  int setting = 0;  // K or labeled nodes per class
  double teacher_acc = 0.0;
  double student_acc = 0.0;
  double improvement = 0.0;
};

struct SweepResult {
  std::string setting_name;  // "K" or "labeled_per_class"
  std::vector<SweepRow> rows;
  double max_gap = 0.0;  // best - worst student accuracy
};

/// sweep.tsv with a header row "<setting>\tteacher_acc\tstudent_acc\timprovement".
void write_sweep(const std::filesystem::path& path, const SweepResult& sweep);

/// Trains one student per K with the same seed and other settings.
SweepResult k_sweep(const Graph& g, const Split& split, const SoftLabelMatrix& teacher, double teacher_acc,
                    student::Variant variant, std::span<const int> ks, const student::StudentHyperparams& hp,
                    std::uint64_t seed);

/// For every ratio draws a fresh split, trains a fresh teacher and a fresh
/// student. Throws std::invalid_argument when a class is too small.
SweepResult label_ratio_sweep(const Graph& g, const teacher::TeacherConfig& teacher_config,
                              std::span<const Index> labeled_per_class, const SplitRequest& base_request,
                              student::Variant variant, const student::StudentHyperparams& hp, std::uint64_t seed);

/// A node singled out by its balance or confidence, with its 1-hop ego graph.
struct CaseStudy {
  Index node = 0;
  std::string kind;  // alpha_top, alpha_bottom, conf_top, conf_bottom
  int rank = 0;      // 0-based within its kind
  double value = 0.0;
  std::vector<Index> ego_nodes;                   // node first, then neighbors
  std::vector<std::pair<Index, Index>> ego_edges;  // induced edges, u < v
  std::vector<int> predicted;                      // per ego node
  double agreement = 0.0;
};

/// Fraction of v's neighbors whose predicted label equals v's; 0 without
/// neighbors.
double neighbor_agreement(const Graph& g, std::span<const int> predicted, Index v);

/// Top and bottom `top_k` nodes by alpha (learned balance only) and by
/// confidence (variants with propagation). top_k is clipped to the node
/// count; ties go to the lower node index.
std::vector<CaseStudy> rank_interpretability(const student::StudentParams& params,
                                             const student::StudentPrediction& pred, const Graph& g, Index top_k,
                                             bool conf_row_normalize = false);

/// Mean agreement over the cases of one kind; 0 when there are none.
double mean_agreement(std::span<const CaseStudy> cases, const std::string& kind);

void write_cases_json(const std::filesystem::path& path, std::span<const CaseStudy> cases);
void write_cases_dot(const std::filesystem::path& path, std::span<const CaseStudy> cases);

}  // namespace cpf
