#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "cpf/autodiff.hpp"
#include "cpf/graph.hpp"
#include "cpf/rng.hpp"

namespace cpf {

/// Per-node class distributions produced by a teacher. Rows are
/// nonnegative and sum to 1; rows of labeled training nodes are one-hot.
struct SoftLabelMatrix {
  Matrix probs;
  std::string source;  // "builtin:gcn", "builtin:sgc", "external:<tag>"
};

/// Overwrites the rows of `nodes` with one-hot ground truth.
void clamp_labeled(SoftLabelMatrix& m, const Graph& g, std::span<const Index> nodes);

/// Throws std::invalid_argument if a row is negative or its sum is off by
/// more than `tolerance`.
void check_row_stochastic(const Matrix& probs, double tolerance);

/// Raised when training produces a non-finite loss.
class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One epoch of a training history.
struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  double val_acc = 0.0;
};

namespace teacher {

/// D^-1/2 (A + I) D^-1/2 with self-loops added to the preprocessed graph.
SparseMatrix normalized_adjacency(const Graph& g);

/// Dense rows scaled to unit L1 norm; all-zero rows are left as is.
Matrix row_normalized(const Matrix& x);

/// Sparse copy of the (optionally row-normalized) feature matrix.
SparseMatrix sparse_features(const Graph& g, bool row_normalize);

/// Glorot-uniform fan_in x fan_out matrix.
Matrix glorot_uniform(Index fan_in, Index fan_out, Rng& rng);

struct GcnParams {
  Matrix w1;  // d x hidden
  Matrix w2;  // hidden x classes
  double dropout = 0.8;
};

struct SgcParams {
  Matrix w;  // d x classes
  int power = 2;
};

/// Precomputed constant operands of a GCN.
struct GcnInputs {
  std::shared_ptr<const SparseMatrix> adjacency;
  std::shared_ptr<const SparseMatrix> features;
};

GcnInputs make_gcn_inputs(const Graph& g, bool normalize_features);

/// Logits A relu(A dropout(X) W1) W2 recorded on a tape; dropout also acts
/// on the hidden layer in training mode.
ad::Var gcn_logits(const GcnInputs& in, ad::Var w1, ad::Var w2, double dropout, bool training, Rng& rng);

/// Row-softmax of the GCN logits (before any clamping).
Matrix gcn_forward(const GcnInputs& in, const GcnParams& params, bool training, Rng& rng);
Matrix gcn_forward(const Graph& g, const GcnParams& params, bool normalize_features = false);

/// A^k X for the given feature matrix.
Matrix sgc_propagate(const Graph& g, const Matrix& features, int power);

/// Row-softmax(A^k X W) (before any clamping). Throws on power < 1.
Matrix sgc_forward(const Graph& g, const Matrix& w, int power, bool normalize_features = false);

enum class TeacherKind { gcn, sgc };

std::string to_string(TeacherKind kind);
TeacherKind teacher_kind_from_string(const std::string& name);

struct TeacherConfig {
  TeacherKind kind = TeacherKind::gcn;
  Index hidden = 64;
  double dropout = 0.8;
  double lr = 0.01;
  double weight_decay = 0.001;
  int sgc_power = 2;
  int max_epochs = 500;
  int patience = 50;
  bool normalize_features = true;
  bool clamp_validation = false;
};

/// Published training settings for each built-in teacher.
TeacherConfig default_teacher_config(TeacherKind kind);

struct TeacherResult {
  TeacherKind kind = TeacherKind::gcn;
  std::variant<GcnParams, SgcParams> params;
  SoftLabelMatrix soft_labels;  // eval mode, clamped on the train set
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double val_acc = 0.0;
  double test_acc = 0.0;
};

/// Full-batch training with Adam on cross-entropy over split.train, early
/// stopping on validation accuracy (best checkpoint kept). Deterministic
/// given `seed`. Throws TrainingDiverged on a non-finite loss.
TeacherResult train_teacher(const Graph& g, const Split& split, const TeacherConfig& config, std::uint64_t seed);

}  // namespace teacher

/// soft_labels.tsv: "#source=<tag>\t#classes=<C>" header, then one row of C
/// probabilities per node with 9 significant digits.
void write_soft_labels(const SoftLabelMatrix& m, const std::filesystem::path& path);

struct SoftLabelReadOptions {
  /// Labeled nodes to check or clamp; when null no labeled-row check runs.
  const Split* split = nullptr;
  /// Clamp split->train rows to one-hot instead of rejecting non-one-hot rows.
  bool clamp = false;
};

/// Reads and validates a soft-label file against `g`. Sources without a
/// "builtin:" prefix are tagged "external:<source>". Throws ParseError.
SoftLabelMatrix read_soft_labels(const std::filesystem::path& path, const Graph& g,
                                 const SoftLabelReadOptions& options = {});

}  // namespace cpf
