#include "cpf/teacher.hpp"

#include <cmath>

#include "cpf/adam.hpp"
#include "cpf/metrics.hpp"

namespace cpf {

void clamp_labeled(SoftLabelMatrix& m, const Graph& g, std::span<const Index> nodes) {
  for (Index v : nodes) {
    m.probs.row(v).setZero();
    m.probs(v, g.labels[v]) = 1.0;
  }
}

void check_row_stochastic(const Matrix& probs, double tolerance) {
  for (Index r = 0; r < probs.rows(); ++r) {
    if ((probs.row(r).array() < 0.0).any() || !probs.row(r).allFinite()) {
      throw std::invalid_argument("row " + std::to_string(r) + " has a negative or non-finite entry");
    }
    const double s = probs.row(r).sum();
    if (std::abs(s - 1.0) > tolerance) {
      throw std::invalid_argument("row " + std::to_string(r) + " sums to " + std::to_string(s));
    }
  }
}

namespace teacher {

SparseMatrix normalized_adjacency(const Graph& g) {
  std::vector<double> inv_sqrt(static_cast<std::size_t>(g.num_nodes));
  for (Index v = 0; v < g.num_nodes; ++v) inv_sqrt[v] = 1.0 / std::sqrt(static_cast<double>(g.degree(v) + 1));
  std::vector<Eigen::Triplet<double, Index>> entries;
  entries.reserve(g.neighbors.size() + static_cast<std::size_t>(g.num_nodes));
  for (Index v = 0; v < g.num_nodes; ++v) {
    entries.emplace_back(v, v, inv_sqrt[v] * inv_sqrt[v]);
    for (Index u : g.neighbors_of(v)) entries.emplace_back(v, u, inv_sqrt[v] * inv_sqrt[u]);
  }
  SparseMatrix a(g.num_nodes, g.num_nodes);
  a.setFromTriplets(entries.begin(), entries.end());
  return a;
}

Matrix row_normalized(const Matrix& x) {
  Matrix out = x;
  for (Index r = 0; r < out.rows(); ++r) {
    const double s = out.row(r).cwiseAbs().sum();
    if (s > 0.0) out.row(r) /= s;
  }
  return out;
}

SparseMatrix sparse_features(const Graph& g, bool row_normalize) {
  if (row_normalize) return row_normalized(g.features).sparseView();
  return g.features.sparseView();
}

Matrix glorot_uniform(Index fan_in, Index fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix w(fan_in, fan_out);
  for (Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-limit, limit);
  return w;
}

GcnInputs make_gcn_inputs(const Graph& g, bool normalize_features) {
  return {std::make_shared<const SparseMatrix>(normalized_adjacency(g)),
          std::make_shared<const SparseMatrix>(sparse_features(g, normalize_features))};
}

ad::Var gcn_logits(const GcnInputs& in, ad::Var w1, ad::Var w2, double dropout, bool training, Rng& rng) {
  auto features = in.features;
  if (training && dropout > 0.0) {
    features = std::make_shared<const SparseMatrix>(ad::dropout_sparse(*in.features, dropout, rng));
  }
  ad::Var hidden = ad::relu(ad::spmm(in.adjacency, ad::spmm(features, w1)));
  hidden = ad::dropout(hidden, dropout, training, rng);
  return ad::spmm(in.adjacency, ad::matmul(hidden, w2));
}

Matrix gcn_forward(const GcnInputs& in, const GcnParams& params, bool training, Rng& rng) {
  if (params.w1.rows() != in.features->cols() || params.w2.rows() != params.w1.cols()) {
    throw std::invalid_argument("gcn_forward: parameter shapes do not match the inputs");
  }
  ad::Tape tape;
  ad::Var w1 = tape.constant(params.w1);
  ad::Var w2 = tape.constant(params.w2);
  return ad::row_softmax(gcn_logits(in, w1, w2, params.dropout, training, rng).value());
}

Matrix gcn_forward(const Graph& g, const GcnParams& params, bool normalize_features) {
  Rng unused(0);
  return gcn_forward(make_gcn_inputs(g, normalize_features), params, false, unused);
}

Matrix sgc_propagate(const Graph& g, const Matrix& features, int power) {
  if (power < 1) throw std::invalid_argument("sgc power must be at least 1");
  const SparseMatrix a = normalized_adjacency(g);
  Matrix out = features;
  for (int k = 0; k < power; ++k) out = a * out;
  return out;
}

Matrix sgc_forward(const Graph& g, const Matrix& w, int power, bool normalize_features) {
  const Matrix x = normalize_features ? row_normalized(g.features) : g.features;
  if (w.rows() != x.cols()) throw std::invalid_argument("sgc_forward: weight rows do not match feature dim");
  return ad::row_softmax(Matrix(sgc_propagate(g, x, power) * w));
}

std::string to_string(TeacherKind kind) { return kind == TeacherKind::gcn ? "gcn" : "sgc"; }

TeacherKind teacher_kind_from_string(const std::string& name) {
  if (name == "gcn") return TeacherKind::gcn;
  if (name == "sgc") return TeacherKind::sgc;
  throw std::invalid_argument("unknown built-in teacher '" + name + "'");
}

TeacherConfig default_teacher_config(TeacherKind kind) {
  TeacherConfig c;
  c.kind = kind;
  if (kind == TeacherKind::sgc) {
    c.lr = 0.1;
    c.weight_decay = 0.001;
    c.dropout = 0.0;
  }
  return c;
}

namespace {

// Shared early-stopping loop. `epoch_step` runs one optimizer step and
// returns the training loss; `evaluate` returns eval-mode probabilities.
template <class Step, class Eval, class Snapshot>
int run_early_stopping(const Graph& g, const Split& split, const TeacherConfig& config, Step&& epoch_step,
                       Eval&& evaluate, Snapshot&& snapshot, std::vector<EpochRecord>& history, double& best_val) {
  best_val = -1.0;
  int best_epoch = 0;
  int since_best = 0;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const double loss = epoch_step();
    if (!std::isfinite(loss)) throw TrainingDiverged("teacher loss became non-finite at epoch " + std::to_string(epoch));
    const double val = split.val.empty() ? 0.0 : accuracy(evaluate(), g, split.val);
    history.push_back({epoch, loss, val});
    if (val > best_val) {
      best_val = val;
      best_epoch = epoch;
      since_best = 0;
      snapshot();
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  return best_epoch;
}

}  // namespace

TeacherResult train_teacher(const Graph& g, const Split& split, const TeacherConfig& config, std::uint64_t seed) {
  split.validate(g.num_nodes);
  if (split.train.empty()) throw std::invalid_argument("teacher training needs labeled nodes");
  Rng init_rng = Rng::stream(seed, "teacher/init");
  Rng dropout_rng = Rng::stream(seed, "teacher/dropout");
  const Index d = g.feature_dim();
  const Index classes = g.num_classes;

  TeacherResult result;
  result.kind = config.kind;
  ad::Adam optimizer({.lr = config.lr, .weight_decay = config.weight_decay});
  ad::Tape tape;
  Matrix probs;

  if (config.kind == TeacherKind::gcn) {
    const GcnInputs inputs = make_gcn_inputs(g, config.normalize_features);
    GcnParams params{glorot_uniform(d, config.hidden, init_rng), glorot_uniform(config.hidden, classes, init_rng),
                     config.dropout};
    GcnParams best = params;
    auto step = [&] {
      tape.reset();
      ad::Var w1 = tape.parameter(params.w1);
      ad::Var w2 = tape.parameter(params.w2);
      ad::Var logits = gcn_logits(inputs, w1, w2, params.dropout, true, dropout_rng);
      ad::Var loss = ad::cross_entropy_rows(logits, split.train, g.labels);
      tape.backward(loss);
      Matrix* ps[] = {&params.w1, &params.w2};
      const Matrix gs[] = {w1.grad(), w2.grad()};
      optimizer.step(ps, gs);
      return loss.value()(0, 0);
    };
    auto evaluate = [&] { return gcn_forward(inputs, params, false, dropout_rng); };
    result.best_epoch = run_early_stopping(g, split, config, step, evaluate, [&] { best = params; }, result.history,
                                           result.val_acc);
    probs = gcn_forward(inputs, best, false, dropout_rng);
    result.params = std::move(best);
  } else {
    const Matrix x = config.normalize_features ? row_normalized(g.features) : g.features;
    auto propagated = std::make_shared<const SparseMatrix>(sgc_propagate(g, x, config.sgc_power).sparseView());
    SgcParams params{glorot_uniform(d, classes, init_rng), config.sgc_power};
    SgcParams best = params;
    auto step = [&] {
      tape.reset();
      ad::Var w = tape.parameter(params.w);
      ad::Var logits = ad::spmm(propagated, w);
      ad::Var loss = ad::cross_entropy_rows(logits, split.train, g.labels);
      tape.backward(loss);
      Matrix* ps[] = {&params.w};
      const Matrix gs[] = {w.grad()};
      optimizer.step(ps, gs);
      return loss.value()(0, 0);
    };
    auto evaluate = [&] { return ad::row_softmax(Matrix(*propagated * params.w)); };
    result.best_epoch = run_early_stopping(g, split, config, step, evaluate, [&] { best = params; }, result.history,
                                           result.val_acc);
    probs = ad::row_softmax(Matrix(*propagated * best.w));
    result.params = std::move(best);
  }

  result.test_acc = split.test.empty() ? 0.0 : accuracy(probs, g, split.test);
  result.soft_labels = {std::move(probs), "builtin:" + to_string(config.kind)};
  clamp_labeled(result.soft_labels, g, split.train);
  if (config.clamp_validation) clamp_labeled(result.soft_labels, g, split.val);
  return result;
}

}  // namespace teacher
}  // namespace cpf
