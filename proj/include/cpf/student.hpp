#pragma once

// Distillation students: classic label propagation, parameterized label
// propagation (PLP), feature transformation (FT) and their per-node
// trainable combination (CPF), plus the distillation training loop.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cpf/autodiff.hpp"
#include "cpf/graph.hpp"
#include "cpf/rng.hpp"
#include "cpf/teacher.hpp"

namespace cpf::student {

enum class Variant { plp, ft, cpf_ind, cpf_tra };

/// "plp", "ft", "cpf-ind", "cpf-tra".
std::string to_string(Variant v);
Variant variant_from_string(const std::string& name);

/// How the per-node balance alpha_v is obtained.
enum class Balance {
  learned,   // sigmoid(alpha_logit)
  all_one,   // pure propagation
  all_zero,  // pure feature transformation
};

Balance balance_for(Variant v);

// ---------------------------------------------------------------------------
// Classic label propagation

struct LPConfig {
  double smoothness = 0.5;  // weight kept on a node's own previous row
  int iterations = 10;
};

/// One-hot rows for `labeled`, uniform rows everywhere else.
Matrix lp_init(const Graph& g, std::span<const Index> labeled);
inline Matrix lp_init(const Graph& g, const Split& split) { return lp_init(g, split.train); }

/// (1 - smoothness) * neighbor mean + smoothness * own row for every
/// unlabeled node; labeled rows reset to one-hot. A node without neighbors
/// uses its own row as the neighbor mean.
Matrix lp_step(const Graph& g, const Matrix& f, double smoothness, std::span<const Index> labeled);

Matrix label_propagation(const Graph& g, const Split& split, const LPConfig& config);

// ---------------------------------------------------------------------------
// Parameters and precomputed inputs

struct StudentHyperparams {
  int layers = 10;           // K
  Index hidden = 64;         // d_MLP
  double dropout = 0.5;
  double lr = 0.005;
  double weight_decay = 0.0005;
  int max_epochs = 1000;
  int patience = 50;
  bool ft_row_normalize = true;     // row-normalize the FT input features
  bool conf_row_normalize = false;  // row-normalize features before z^T X_v
};

/// Learned student state. Which matrices are populated depends on the
/// variant: PLP has only `conf`; FT only the MLP; CPF-tra alpha, conf and
/// MLP; CPF-ind alpha, z and MLP.
struct StudentParams {
  Variant variant = Variant::cpf_tra;
  Balance balance = Balance::learned;
  int layers = 10;
  double dropout = 0.5;
  std::uint64_t seed = 0;

  Matrix alpha_logit;  // n x 1
  Matrix conf;         // n x 1 (transductive)
  Matrix z;            // d x 1 (inductive)
  Matrix w1;           // d x hidden
  Matrix b1;           // 1 x hidden
  Matrix w2;           // hidden x classes
  Matrix b2;           // 1 x classes

  bool uses_propagation() const { return variant != Variant::ft; }
  bool uses_features() const { return variant != Variant::plp; }
  bool inductive() const { return variant == Variant::cpf_ind; }

  /// alpha_v per node as an n x 1 column.
  Matrix alpha(Index num_nodes) const;
};

/// Zero alpha logits (alpha = 0.5), zero confidences / z, Glorot-uniform MLP
/// weights and zero biases.
StudentParams init_student_params(const Graph& g, Variant variant, const StudentHyperparams& hp, std::uint64_t seed);

/// Graph-derived constants shared by every forward pass of one run.
struct StudentInputs {
  const Graph* graph = nullptr;
  std::shared_ptr<const SparseMatrix> ft_features;
  std::shared_ptr<const SparseMatrix> conf_features;
  std::vector<Index> labeled;    // V_L
  std::vector<Index> unlabeled;  // V_U
  Matrix init;                   // layer-0 prediction
  Matrix labeled_onehot;         // |V_L| x classes
};

StudentInputs make_student_inputs(const Graph& g, const Split& split, const StudentHyperparams& hp);

// ---------------------------------------------------------------------------
// Forward pieces

/// Confidence score per node: the transductive c_v, or z^T X_v.
Matrix confidence_scores(const StudentInputs& in, const StudentParams& params);

/// Normalized propagation weights. For target v the entries
/// [offsets[v], offsets[v+1]) hold sources v itself (first) and then its
/// neighbors in CSR order.
struct EdgeWeights {
  std::vector<Index> offsets;
  std::vector<Index> sources;
  std::vector<double> weights;
};

EdgeWeights plp_edge_weights(const Graph& g, const Matrix& confidence);

/// softmax(MLP(x)) per row: dense -> relu -> dropout -> dense -> softmax,
/// with input dropout as well in training mode.
Matrix ft_forward(const Matrix& x, const StudentParams& params, bool training, Rng& rng);

/// f^K with optional per-layer snapshots f^0..f^K.
struct StudentPrediction {
  Matrix probs;
  std::vector<Matrix> per_layer;
};

/// Parameter groups of the student.
enum class Group { alpha_logit, conf, z, w1, b1, w2, b2 };

std::string to_string(Group group);
/// Groups that receive gradients for a variant.
std::vector<Group> trainable_groups(Variant v);
Matrix& group_matrix(StudentParams& params, Group group);
const Matrix& group_matrix(const StudentParams& params, Group group);

/// Tape handles of a recorded forward pass.
struct ForwardVars {
  ad::Var probs;
  std::vector<ad::Var> layers;  // f^0..f^K when requested
  std::vector<std::pair<Group, ad::Var>> params;
};

/// Records a forward pass with every trainable group as a tape parameter,
/// so gradients can be read back after backward().
ForwardVars record_forward(ad::Tape& tape, const StudentInputs& in, const StudentParams& params, bool training,
                           Rng& rng, bool keep_layers = false);

/// Stacks K layers of alpha_v * PLP + (1 - alpha_v) * FT over lp_init,
/// clamping labeled rows after every layer.
StudentPrediction cpf_forward(const StudentInputs& in, const StudentParams& params, bool keep_layers = false);

/// Sum over `unlabeled` of the Euclidean distance between prediction and
/// teacher rows.
ad::Var distill_loss(ad::Var probs, const Matrix& teacher, std::span<const Index> unlabeled);
double distill_loss(const Matrix& probs, const Matrix& teacher, std::span<const Index> unlabeled);

// ---------------------------------------------------------------------------
// Training

struct StudentResult {
  StudentParams params;  // best-validation checkpoint
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double val_acc = 0.0;
  double test_acc = 0.0;
  StudentPrediction prediction;  // eval mode, best checkpoint
};

/// Full-batch Adam on the distillation loss with early stopping on
/// validation accuracy; returns the first epoch reaching the best accuracy.
/// Throws TrainingDiverged on a non-finite loss.
StudentResult train_student(const Graph& g, const Split& split, const SoftLabelMatrix& teacher, Variant variant,
                            const StudentHyperparams& hp, std::uint64_t seed);

// ---------------------------------------------------------------------------
// student.tsv

void write_student(const StudentParams& params, const std::filesystem::path& path);
StudentParams read_student(const std::filesystem::path& path);

}  // namespace cpf::student
