#include "cpf/student.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>

#include "cpf/adam.hpp"
#include "cpf/metrics.hpp"

namespace cpf::student {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::plp: return "plp";
    case Variant::ft: return "ft";
    case Variant::cpf_ind: return "cpf-ind";
    case Variant::cpf_tra: return "cpf-tra";
  }
  return "unknown";
}

Variant variant_from_string(const std::string& name) {
  if (name == "plp") return Variant::plp;
  if (name == "ft") return Variant::ft;
  if (name == "cpf-ind" || name == "cpf_ind") return Variant::cpf_ind;
  if (name == "cpf-tra" || name == "cpf_tra") return Variant::cpf_tra;
  throw std::invalid_argument("unknown student variant '" + name + "'");
}

Balance balance_for(Variant v) {
  switch (v) {
    case Variant::plp: return Balance::all_one;
    case Variant::ft: return Balance::all_zero;
    default: return Balance::learned;
  }
}

std::string to_string(Group group) {
  switch (group) {
    case Group::alpha_logit: return "alpha";
    case Group::conf: return "conf";
    case Group::z: return "z";
    case Group::w1: return "w1";
    case Group::b1: return "b1";
    case Group::w2: return "w2";
    case Group::b2: return "b2";
  }
  return "unknown";
}

std::vector<Group> trainable_groups(Variant v) {
  switch (v) {
    case Variant::plp: return {Group::conf};
    case Variant::ft: return {Group::w1, Group::b1, Group::w2, Group::b2};
    case Variant::cpf_ind: return {Group::alpha_logit, Group::z, Group::w1, Group::b1, Group::w2, Group::b2};
    case Variant::cpf_tra: return {Group::alpha_logit, Group::conf, Group::w1, Group::b1, Group::w2, Group::b2};
  }
  return {};
}

Matrix& group_matrix(StudentParams& params, Group group) {
  return const_cast<Matrix&>(group_matrix(static_cast<const StudentParams&>(params), group));
}

const Matrix& group_matrix(const StudentParams& params, Group group) {
  switch (group) {
    case Group::alpha_logit: return params.alpha_logit;
    case Group::conf: return params.conf;
    case Group::z: return params.z;
    case Group::w1: return params.w1;
    case Group::b1: return params.b1;
    case Group::w2: return params.w2;
    case Group::b2: return params.b2;
  }
  throw std::invalid_argument("unknown parameter group");
}

// ---------------------------------------------------------------------------

Matrix lp_init(const Graph& g, std::span<const Index> labeled) {
  Matrix f = Matrix::Constant(g.num_nodes, g.num_classes, 1.0 / static_cast<double>(g.num_classes));
  for (Index v : labeled) {
    f.row(v).setZero();
    f(v, g.labels[v]) = 1.0;
  }
  return f;
}

Matrix lp_step(const Graph& g, const Matrix& f, double smoothness, std::span<const Index> labeled) {
  if (smoothness < 0.0 || smoothness > 1.0) throw std::invalid_argument("lp smoothness must lie in [0, 1]");
  Matrix next(f.rows(), f.cols());
  for (Index v = 0; v < g.num_nodes; ++v) {
    const auto nbrs = g.neighbors_of(v);
    Eigen::RowVectorXd mean = f.row(v);
    if (!nbrs.empty()) {
      mean.setZero();
      for (Index u : nbrs) mean += f.row(u);
      mean /= static_cast<double>(nbrs.size());
    }
    next.row(v) = (1.0 - smoothness) * mean + smoothness * f.row(v);
  }
  for (Index v : labeled) {
    next.row(v).setZero();
    next(v, g.labels[v]) = 1.0;
  }
  return next;
}

Matrix label_propagation(const Graph& g, const Split& split, const LPConfig& config) {
  Matrix f = lp_init(g, split.train);
  for (int k = 0; k < config.iterations; ++k) f = lp_step(g, f, config.smoothness, split.train);
  return f;
}

// ---------------------------------------------------------------------------

Matrix StudentParams::alpha(Index num_nodes) const {
  switch (balance) {
    case Balance::all_one: return Matrix::Ones(num_nodes, 1);
    case Balance::all_zero: return Matrix::Zero(num_nodes, 1);
    case Balance::learned: break;
  }
  return (1.0 / (1.0 + (-alpha_logit.array()).exp())).matrix();
}

StudentParams init_student_params(const Graph& g, Variant variant, const StudentHyperparams& hp, std::uint64_t seed) {
  if (hp.layers < 1) throw std::invalid_argument("student needs at least one propagation layer");
  if (hp.hidden < 1) throw std::invalid_argument("student MLP needs a positive hidden size");
  StudentParams p;
  p.variant = variant;
  p.balance = balance_for(variant);
  p.layers = hp.layers;
  p.dropout = hp.dropout;
  p.seed = seed;
  const Index n = g.num_nodes;
  if (variant == Variant::cpf_ind || variant == Variant::cpf_tra) p.alpha_logit = Matrix::Zero(n, 1);
  if (variant == Variant::plp || variant == Variant::cpf_tra) p.conf = Matrix::Zero(n, 1);
  if (variant == Variant::cpf_ind) p.z = Matrix::Zero(g.feature_dim(), 1);
  if (p.uses_features()) {
    Rng rng = Rng::stream(seed, "student/init");
    p.w1 = teacher::glorot_uniform(g.feature_dim(), hp.hidden, rng);
    p.b1 = Matrix::Zero(1, hp.hidden);
    p.w2 = teacher::glorot_uniform(hp.hidden, g.num_classes, rng);
    p.b2 = Matrix::Zero(1, g.num_classes);
  }
  return p;
}

StudentInputs make_student_inputs(const Graph& g, const Split& split, const StudentHyperparams& hp) {
  split.validate(g.num_nodes);
  StudentInputs in;
  in.graph = &g;
  in.ft_features = std::make_shared<const SparseMatrix>(teacher::sparse_features(g, hp.ft_row_normalize));
  in.conf_features = hp.conf_row_normalize == hp.ft_row_normalize
                         ? in.ft_features
                         : std::make_shared<const SparseMatrix>(teacher::sparse_features(g, hp.conf_row_normalize));
  in.labeled = split.train;
  in.unlabeled = split.unlabeled();
  in.init = lp_init(g, in.labeled);
  in.labeled_onehot = Matrix::Zero(static_cast<Index>(in.labeled.size()), g.num_classes);
  for (std::size_t i = 0; i < in.labeled.size(); ++i) in.labeled_onehot(static_cast<Index>(i), g.labels[in.labeled[i]]) = 1.0;
  return in;
}

// ---------------------------------------------------------------------------

Matrix confidence_scores(const StudentInputs& in, const StudentParams& params) {
  if (params.inductive()) return *in.conf_features * params.z;
  if (params.conf.rows() != in.graph->num_nodes) throw std::invalid_argument("student has no confidence scores");
  return params.conf;
}

EdgeWeights plp_edge_weights(const Graph& g, const Matrix& confidence) {
  if (confidence.rows() != g.num_nodes || confidence.cols() != 1) {
    throw std::invalid_argument("confidence must be num_nodes x 1");
  }
  if (!confidence.allFinite()) throw std::invalid_argument("confidence scores must be finite");
  EdgeWeights w;
  w.offsets.reserve(static_cast<std::size_t>(g.num_nodes) + 1);
  w.offsets.push_back(0);
  for (Index v = 0; v < g.num_nodes; ++v) {
    const auto nbrs = g.neighbors_of(v);
    const std::size_t start = w.sources.size();
    w.sources.push_back(v);
    w.sources.insert(w.sources.end(), nbrs.begin(), nbrs.end());
    double mx = confidence(v, 0);
    for (Index u : nbrs) mx = std::max(mx, confidence(u, 0));
    double z = 0.0;
    for (std::size_t i = start; i < w.sources.size(); ++i) {
      w.weights.push_back(std::exp(confidence(w.sources[i], 0) - mx));
      z += w.weights.back();
    }
    for (std::size_t i = start; i < w.sources.size(); ++i) w.weights[i] /= z;
    w.offsets.push_back(static_cast<Index>(w.sources.size()));
  }
  return w;
}

Matrix ft_forward(const Matrix& x, const StudentParams& params, bool training, Rng& rng) {
  if (x.cols() != params.w1.rows()) throw std::invalid_argument("ft_forward: feature dim does not match w1");
  ad::Tape tape;
  ad::Var h = ad::dropout(tape.constant(x), params.dropout, training, rng);
  h = ad::relu(ad::add_row(ad::matmul(h, tape.constant(params.w1)), tape.constant(params.b1)));
  h = ad::dropout(h, params.dropout, training, rng);
  return ad::row_softmax(ad::add_row(ad::matmul(h, tape.constant(params.w2)), tape.constant(params.b2))).value();
}

ForwardVars record_forward(ad::Tape& tape, const StudentInputs& in, const StudentParams& params, bool training,
                           Rng& rng, bool keep_layers) {
  const Graph& g = *in.graph;
  ForwardVars fv;
  auto param = [&](Group group) {
    ad::Var v = tape.parameter(group_matrix(params, group));
    fv.params.emplace_back(group, v);
    return v;
  };

  std::optional<ad::Var> scores;
  if (params.uses_propagation()) {
    scores = params.inductive() ? ad::spmm(in.conf_features, param(Group::z)) : param(Group::conf);
  }

  std::optional<ad::Var> ft;
  if (params.uses_features()) {
    auto x = in.ft_features;
    if (training && params.dropout > 0.0) {
      x = std::make_shared<const SparseMatrix>(ad::dropout_sparse(*x, params.dropout, rng));
    }
    ad::Var h = ad::relu(ad::add_row(ad::spmm(x, param(Group::w1)), param(Group::b1)));
    h = ad::dropout(h, params.dropout, training, rng);
    ft = ad::row_softmax(ad::add_row(ad::matmul(h, param(Group::w2)), param(Group::b2)));
  }

  std::optional<ad::Var> alpha;
  std::optional<ad::Var> one_minus_alpha;
  if (scores && ft) {
    alpha = params.balance == Balance::learned ? ad::sigmoid(param(Group::alpha_logit))
                                               : tape.constant(params.alpha(g.num_nodes));
    one_minus_alpha = ad::one_minus(*alpha);
  }

  ad::Var f = tape.constant(in.init);
  ad::Var onehot = tape.constant(in.labeled_onehot);
  if (keep_layers) fv.layers.push_back(f);
  for (int k = 0; k < params.layers; ++k) {
    ad::Var next = f;
    if (!ft) {
      next = ad::neighborhood_softmax_aggregate(g, *scores, f);
    } else if (!scores) {
      next = *ft;
    } else {
      ad::Var prop = ad::neighborhood_softmax_aggregate(g, *scores, f);
      next = ad::add(ad::mul_col(*alpha, prop), ad::mul_col(*one_minus_alpha, *ft));
    }
    f = ad::scatter_rows(next, in.labeled, onehot);
    if (keep_layers) fv.layers.push_back(f);
  }
  fv.probs = f;
  return fv;
}

StudentPrediction cpf_forward(const StudentInputs& in, const StudentParams& params, bool keep_layers) {
  ad::Tape tape;
  Rng unused(0);
  const ForwardVars fv = record_forward(tape, in, params, false, unused, keep_layers);
  StudentPrediction out;
  out.probs = fv.probs.value();
  for (const auto& layer : fv.layers) out.per_layer.push_back(layer.value());
  return out;
}

ad::Var distill_loss(ad::Var probs, const Matrix& teacher, std::span<const Index> unlabeled) {
  if (teacher.rows() != probs.rows() || teacher.cols() != probs.cols()) {
    throw std::invalid_argument("distill_loss: teacher shape does not match prediction");
  }
  Matrix target(static_cast<Index>(unlabeled.size()), teacher.cols());
  for (std::size_t i = 0; i < unlabeled.size(); ++i) target.row(static_cast<Index>(i)) = teacher.row(unlabeled[i]);
  ad::Var picked = ad::gather_rows(probs, unlabeled);
  return ad::l2_row_norm_sum(ad::sub(picked, probs.tape->constant(std::move(target))));
}

double distill_loss(const Matrix& probs, const Matrix& teacher, std::span<const Index> unlabeled) {
  if (teacher.rows() != probs.rows() || teacher.cols() != probs.cols()) {
    throw std::invalid_argument("distill_loss: teacher shape does not match prediction");
  }
  double total = 0.0;
  for (Index v : unlabeled) total += (probs.row(v) - teacher.row(v)).norm();
  return total;
}

// ---------------------------------------------------------------------------

StudentResult train_student(const Graph& g, const Split& split, const SoftLabelMatrix& teacher, Variant variant,
                            const StudentHyperparams& hp, std::uint64_t seed) {
  if (teacher.probs.rows() != g.num_nodes || teacher.probs.cols() != g.num_classes) {
    throw std::invalid_argument("teacher soft labels do not match the graph");
  }
  check_row_stochastic(teacher.probs, 1e-4);
  const StudentInputs inputs = make_student_inputs(g, split, hp);

  StudentResult result;
  StudentParams params = init_student_params(g, variant, hp, seed);
  StudentParams best = params;
  Rng dropout_rng = Rng::stream(seed, "student/dropout");
  ad::Adam optimizer({.lr = hp.lr, .weight_decay = hp.weight_decay});
  ad::Tape tape;

  double best_val = -1.0;
  int since_best = 0;
  std::vector<Matrix*> targets;
  std::vector<Matrix> grads;
  for (int epoch = 1; epoch <= hp.max_epochs; ++epoch) {
    tape.reset();
    const ForwardVars fv = record_forward(tape, inputs, params, true, dropout_rng);
    ad::Var loss = distill_loss(fv.probs, teacher.probs, inputs.unlabeled);
    const double loss_value = loss.value()(0, 0);
    if (!std::isfinite(loss_value)) {
      throw TrainingDiverged("student loss became non-finite at epoch " + std::to_string(epoch));
    }
    tape.backward(loss);
    targets.clear();
    grads.clear();
    for (const auto& [group, var] : fv.params) {
      targets.push_back(&group_matrix(params, group));
      grads.push_back(var.grad());
    }
    optimizer.step(targets, grads);

    const double val = split.val.empty() ? 0.0 : accuracy(cpf_forward(inputs, params).probs, g, split.val);
    result.history.push_back({epoch, loss_value, val});
    if (val > best_val) {
      best_val = val;
      result.best_epoch = epoch;
      since_best = 0;
      best = params;
    } else if (++since_best >= hp.patience) {
      break;
    }
  }

  result.params = std::move(best);
  result.val_acc = best_val;
  result.prediction = cpf_forward(inputs, result.params, false);
  result.test_acc = split.test.empty() ? 0.0 : accuracy(result.prediction.probs, g, split.test);
  return result;
}

}  // namespace cpf::student
