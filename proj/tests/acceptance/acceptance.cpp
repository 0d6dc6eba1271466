// Acceptance gate for the criteria that need no external dataset. Prints one
// PASS/FAIL line per criterion and exits nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "cpf/student.hpp"
#include "cpf/synthetic.hpp"
#include "test_support.hpp"

using namespace cpf;
using cpf::testing::random_instance;
using cpf::testing::random_params;
using student::Variant;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

Variant variant_at(std::size_t i) {
  static constexpr Variant all[] = {Variant::cpf_tra, Variant::cpf_ind, Variant::plp, Variant::ft};
  return all[i % 4];
}

// Analytic vs central-difference gradients, step 1e-5, relative error < 1e-5.
Outcome gradient_suite() {
  const auto start = Clock::now();
  Rng rng = Rng::stream(11, "acceptance/gradients");
  double worst = 0.0;
  std::size_t groups_checked = 0;
  std::vector<bool> seen(7, false);
  for (int trial = 0; trial < 20; ++trial) {
    const auto inst = random_instance(rng, 10, 4, 6);
    const Variant variant = trial % 2 == 0 ? Variant::cpf_tra : Variant::cpf_ind;
    const int layers = 1 + static_cast<int>(rng.below(4));
    const auto params = random_params(rng, inst.graph, variant, layers, 1 + static_cast<Index>(rng.below(5)));
    const auto teacher = testing::random_distribution(rng, inst.graph.num_nodes, inst.graph.num_classes);
    student::StudentHyperparams hp;
    const auto in = student::make_student_inputs(inst.graph, inst.split, hp);
    for (const auto& check : testing::gradient_check(in, params, teacher, 1e-5)) {
      worst = std::max(worst, check.relative_error);
      seen[static_cast<std::size_t>(check.group)] = true;
      ++groups_checked;
    }
  }
  const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
  const bool all_groups = std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
  std::ostringstream d;
  d << "20 instances, " << groups_checked << " group checks, max relative error " << worst << ", " << seconds
    << " s, all 7 groups covered: " << (all_groups ? "yes" : "no");
  return {worst < 1e-5 && seconds < 30.0 && all_groups, d.str()};
}

// Row sums, one-hot labeled rows and edge-weight sums on 100 random graphs.
Outcome distribution_invariants() {
  Rng rng = Rng::stream(12, "acceptance/invariants");
  double worst_row = 0.0;
  double worst_weight = 0.0;
  bool negative = false;
  bool onehot = true;
  for (int trial = 0; trial < 100; ++trial) {
    const auto inst = random_instance(rng, 30, 6, 8, 0.15);
    const Variant variant = variant_at(static_cast<std::size_t>(trial));
    const int layers = 1 + static_cast<int>(rng.below(10));
    const auto params = random_params(rng, inst.graph, variant, layers, 1 + static_cast<Index>(rng.below(8)));
    const auto in = student::make_student_inputs(inst.graph, inst.split, {});
    const auto pred = student::cpf_forward(in, params, true);
    for (const Matrix& layer : pred.per_layer) {
      for (Index r = 0; r < layer.rows(); ++r) worst_row = std::max(worst_row, std::abs(layer.row(r).sum() - 1.0));
      negative = negative || (layer.array() < 0.0).any();
      for (Index v : inst.split.train) {
        for (Index k = 0; k < layer.cols(); ++k) {
          onehot = onehot && layer(v, k) == (inst.graph.labels[v] == k ? 1.0 : 0.0);
        }
      }
    }
    if (params.uses_propagation()) {
      const auto w = student::plp_edge_weights(inst.graph, student::confidence_scores(in, params));
      for (Index v = 0; v < inst.graph.num_nodes; ++v) {
        double s = 0.0;
        for (Index i = w.offsets[v]; i < w.offsets[v + 1]; ++i) s += w.weights[i];
        worst_weight = std::max(worst_weight, std::abs(s - 1.0));
      }
    }
  }
  std::ostringstream d;
  d << "max |row sum - 1| " << worst_row << ", max |weight sum - 1| " << worst_weight
    << ", negative entries: " << (negative ? "yes" : "no") << ", labeled rows one-hot: " << (onehot ? "yes" : "no");
  return {worst_row <= 1e-6 && worst_weight <= 1e-9 && !negative && onehot, d.str()};
}

// Dense brute force vs cpf_forward, and the hand-computed lp_step table.
Outcome oracle_equivalence() {
  Rng rng = Rng::stream(13, "acceptance/oracle");
  double worst = 0.0;
  for (int trial = 0; trial < 60; ++trial) {
    const auto inst = random_instance(rng, 10, 4, 6);
    const Variant variant = variant_at(static_cast<std::size_t>(trial));
    const auto params = random_params(rng, inst.graph, variant, 1 + static_cast<int>(rng.below(6)),
                                      1 + static_cast<Index>(rng.below(6)));
    const auto in = student::make_student_inputs(inst.graph, inst.split, {});
    const auto pred = student::cpf_forward(in, params, true);
    const auto oracle = testing::dense_forward(inst.graph, testing::dense_student(inst.graph, inst.split, params));
    for (std::size_t k = 0; k < oracle.size(); ++k) {
      worst = std::max(worst, (pred.per_layer[k] - oracle[k]).cwiseAbs().maxCoeff());
    }
  }

  // Path 0 - 1 - 2, node 0 labeled with class 0, two classes.
  const std::vector<Edge> edges = {{0, 1}, {1, 2}};
  const Graph path = build_graph(3, edges, Matrix::Zero(3, 1), {0, 1, 1}, 2);
  const std::vector<Index> labeled = {0};
  const Matrix f0 = student::lp_init(path, labeled);
  struct Row {
    double smoothness;
    int steps;
    double node1[2];
    double node2[2];
  };
  const Row table[] = {
      {0.0, 1, {0.75, 0.25}, {0.5, 0.5}},     {0.5, 1, {0.625, 0.375}, {0.5, 0.5}},
      {0.5, 2, {0.6875, 0.3125}, {0.5625, 0.4375}}, {1.0, 1, {0.5, 0.5}, {0.5, 0.5}},
      {0.0, 2, {0.75, 0.25}, {0.75, 0.25}},
  };
  bool lp_exact = true;
  for (const Row& row : table) {
    Matrix f = f0;
    for (int s = 0; s < row.steps; ++s) f = student::lp_step(path, f, row.smoothness, labeled);
    lp_exact = lp_exact && f(0, 0) == 1.0 && f(0, 1) == 0.0 && f(1, 0) == row.node1[0] && f(1, 1) == row.node1[1] &&
               f(2, 0) == row.node2[0] && f(2, 1) == row.node2[1];
  }
  std::ostringstream d;
  d << "60 graphs, max |cpf - dense oracle| " << worst << " over all layers; lp_step table exact: "
    << (lp_exact ? "yes" : "no");
  return {worst <= 1e-9 && lp_exact, d.str()};
}

// alpha = 1 gives PLP bitwise; alpha = 0 gives FT rows; equal confidences
// give uniform weights exactly.
Outcome reductions() {
  Rng rng = Rng::stream(14, "acceptance/reductions");
  bool plp_bitwise = true;
  bool ft_bitwise = true;
  bool uniform_exact = true;
  for (int trial = 0; trial < 30; ++trial) {
    const auto inst = random_instance(rng, 20, 5, 6, 0.2);
    const auto& g = inst.graph;
    const auto in = student::make_student_inputs(g, inst.split, {});
    const int layers = 1 + static_cast<int>(rng.below(8));
    auto cpf = random_params(rng, g, Variant::cpf_tra, layers, 4);

    cpf.balance = student::Balance::all_one;
    auto plp = student::init_student_params(g, Variant::plp, {.layers = layers}, 0);
    plp.conf = cpf.conf;
    const auto a = student::cpf_forward(in, cpf, true);
    const auto b = student::cpf_forward(in, plp, true);
    for (std::size_t k = 0; k < a.per_layer.size(); ++k) plp_bitwise = plp_bitwise && a.per_layer[k] == b.per_layer[k];

    cpf.balance = student::Balance::all_zero;
    auto ft = cpf;
    ft.variant = Variant::ft;
    ft.balance = student::Balance::all_zero;
    const auto c = student::cpf_forward(in, cpf, true);
    const auto ft_rows = student::cpf_forward(in, ft, false).probs;
    for (std::size_t k = 1; k < c.per_layer.size(); ++k) {
      for (Index v : in.unlabeled) ft_bitwise = ft_bitwise && c.per_layer[k].row(v) == ft_rows.row(v);
    }

    const Matrix equal = Matrix::Constant(g.num_nodes, 1, rng.uniform(-3.0, 3.0));
    const auto w = student::plp_edge_weights(g, equal);
    for (Index v = 0; v < g.num_nodes; ++v) {
      for (Index i = w.offsets[v]; i < w.offsets[v + 1]; ++i) {
        uniform_exact = uniform_exact && w.weights[i] == 1.0 / static_cast<double>(g.degree(v) + 1);
      }
    }
  }
  std::ostringstream d;
  d << "30 graphs; alpha=1 equals PLP bitwise: " << (plp_bitwise ? "yes" : "no")
    << "; alpha=0 unlabeled rows equal FT from layer 1: " << (ft_bitwise ? "yes" : "no")
    << "; equal confidences give 1/(deg+1) exactly: " << (uniform_exact ? "yes" : "no");
  return {plp_bitwise && ft_bitwise && uniform_exact, d.str()};
}

// Median per-epoch wall time of a CPF-tra student on two synthetic graphs
// with equal node count and feature dim, the second with twice the edges.
Outcome linear_scaling() {
  auto per_epoch = [](double degree) {
    SyntheticSpec spec;
    spec.num_nodes = 20000;
    spec.num_classes = 5;
    spec.feature_dim = 100;
    spec.avg_degree = degree;
    spec.seed = 3;
    const Graph g = make_synthetic_graph(spec);
    SplitRequest request;
    request.seed = 3;
    const Split split = make_split(g, request);
    const auto teacher = testing::random_distribution(*std::make_unique<Rng>(5), g.num_nodes, g.num_classes);
    student::StudentHyperparams hp;
    hp.layers = 10;
    hp.max_epochs = 10;
    hp.patience = 1000;
    std::vector<double> samples;
    for (int rep = 0; rep < 5; ++rep) {
      const auto start = Clock::now();
      student::train_student(g, split, {teacher, "external:random"}, Variant::cpf_tra, hp, 1);
      samples.push_back(std::chrono::duration<double>(Clock::now() - start).count() / hp.max_epochs);
    }
    std::sort(samples.begin(), samples.end());
    return std::make_pair(samples[samples.size() / 2], g.num_edges());
  };
  const auto [t1, e1] = per_epoch(10.0);
  const auto [t2, e2] = per_epoch(20.0);
  const double ratio = t2 / t1;
  std::ostringstream d;
  d << "|E| " << e1 << " -> " << e2 << " (x" << static_cast<double>(e2) / static_cast<double>(e1)
    << "), per-epoch " << t1 * 1e3 << " ms -> " << t2 * 1e3 << " ms, ratio " << ratio << " (limit 2.5)";
  return {ratio <= 2.5, d.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient suite", gradient_suite},
      {"distribution invariants", distribution_invariants},
      {"oracle equivalence", oracle_equivalence},
      {"reductions", reductions},
      {"linear scaling", linear_scaling},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome outcome;
    try {
      outcome = run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s  %s: %s\n", outcome.pass ? "PASS" : "FAIL", name.c_str(), outcome.detail.c_str());
    std::fflush(stdout);
    failures += outcome.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
