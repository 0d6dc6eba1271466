#include "cpf/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "cpf/bundle.hpp"
#include "cpf/metrics.hpp"
#include "tsv.hpp"

namespace cpf {

MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  if (values.empty()) return out;
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return out;
}

void write_report(const std::filesystem::path& path, const Report& report) {
  std::string text;
  for (const auto& [key, value] : report) text += key + "\t" + value + "\n";
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  tsv::write_file(path, text);
}

Report read_report(const std::filesystem::path& path) {
  Report out;
  const std::string content = tsv::read_file(path);
  for (const auto& line : tsv::lines(content)) {
    const auto cells = tsv::fields(line.text);
    if (cells.size() != 2) throw ParseError(path.string(), line.number, "expected 'key\\tvalue'");
    out.emplace_back(std::string(cells[0]), std::string(cells[1]));
  }
  return out;
}

void write_sweep(const std::filesystem::path& path, const SweepResult& sweep) {
  std::string text = sweep.setting_name + "\tteacher_acc\tstudent_acc\timprovement\n";
  for (const auto& row : sweep.rows) {
    text += std::to_string(row.setting) + "\t" + format_real(row.teacher_acc) + "\t" + format_real(row.student_acc) +
            "\t" + format_real(row.improvement) + "\n";
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  tsv::write_file(path, text);
}

namespace {

void finish_sweep(SweepResult& sweep) {
  if (sweep.rows.empty()) return;
  auto [lo, hi] = std::minmax_element(sweep.rows.begin(), sweep.rows.end(),
                                      [](const SweepRow& a, const SweepRow& b) { return a.student_acc < b.student_acc; });
  sweep.max_gap = hi->student_acc - lo->student_acc;
}

}  // namespace

SweepResult k_sweep(const Graph& g, const Split& split, const SoftLabelMatrix& teacher, double teacher_acc,
                    student::Variant variant, std::span<const int> ks, const student::StudentHyperparams& hp,
                    std::uint64_t seed) {
  SweepResult sweep;
  sweep.setting_name = "K";
  for (int k : ks) {
    student::StudentHyperparams run = hp;
    run.layers = k;
    const auto result = student::train_student(g, split, teacher, variant, run, seed);
    sweep.rows.push_back({k, teacher_acc, result.test_acc, relative_improvement(result.test_acc, teacher_acc)});
  }
  finish_sweep(sweep);
  return sweep;
}

SweepResult label_ratio_sweep(const Graph& g, const teacher::TeacherConfig& teacher_config,
                              std::span<const Index> labeled_per_class, const SplitRequest& base_request,
                              student::Variant variant, const student::StudentHyperparams& hp, std::uint64_t seed) {
  SweepResult sweep;
  sweep.setting_name = "labeled_per_class";
  for (Index ratio : labeled_per_class) {
    SplitRequest request = base_request;
    request.labeled_per_class = ratio;
    request.seed = seed;
    const Split split = make_split(g, request);
    const auto teacher = teacher::train_teacher(g, split, teacher_config, seed);
    const auto result = student::train_student(g, split, teacher.soft_labels, variant, hp, seed);
    sweep.rows.push_back({static_cast<int>(ratio), teacher.test_acc, result.test_acc,
                          relative_improvement(result.test_acc, teacher.test_acc)});
  }
  finish_sweep(sweep);
  return sweep;
}

double neighbor_agreement(const Graph& g, std::span<const int> predicted, Index v) {
  const auto nbrs = g.neighbors_of(v);
  if (nbrs.empty()) return 0.0;
  const auto same = std::count_if(nbrs.begin(), nbrs.end(), [&](Index u) { return predicted[u] == predicted[v]; });
  return static_cast<double>(same) / static_cast<double>(nbrs.size());
}

namespace {

CaseStudy make_case(const Graph& g, std::span<const int> predicted, Index v, const std::string& kind, int rank,
                    double value) {
  CaseStudy c;
  c.node = v;
  c.kind = kind;
  c.rank = rank;
  c.value = value;
  c.ego_nodes.push_back(v);
  for (Index u : g.neighbors_of(v)) c.ego_nodes.push_back(u);
  std::vector<Index> members = c.ego_nodes;
  std::sort(members.begin(), members.end());
  for (Index a : members) {
    for (Index b : g.neighbors_of(a)) {
      if (a < b && std::binary_search(members.begin(), members.end(), b)) c.ego_edges.emplace_back(a, b);
    }
  }
  for (Index u : c.ego_nodes) c.predicted.push_back(predicted[u]);
  c.agreement = neighbor_agreement(g, predicted, v);
  return c;
}

void add_ranked(std::vector<CaseStudy>& out, const Graph& g, std::span<const int> predicted, const Matrix& values,
                Index top_k, const std::string& name) {
  std::vector<Index> order(static_cast<std::size_t>(g.num_nodes));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return values(a, 0) > values(b, 0); });
  for (Index i = 0; i < top_k; ++i) {
    out.push_back(make_case(g, predicted, order[i], name + "_top", static_cast<int>(i), values(order[i], 0)));
  }
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return values(a, 0) < values(b, 0); });
  for (Index i = 0; i < top_k; ++i) {
    out.push_back(make_case(g, predicted, order[i], name + "_bottom", static_cast<int>(i), values(order[i], 0)));
  }
}

}  // namespace

std::vector<CaseStudy> rank_interpretability(const student::StudentParams& params,
                                             const student::StudentPrediction& pred, const Graph& g, Index top_k,
                                             bool conf_row_normalize) {
  if (pred.probs.rows() != g.num_nodes) throw std::invalid_argument("prediction does not match the graph");
  top_k = std::clamp<Index>(top_k, 0, g.num_nodes);
  const std::vector<int> predicted = argmax_rows(pred.probs);
  std::vector<CaseStudy> out;
  if (params.balance == student::Balance::learned && params.alpha_logit.rows() == g.num_nodes) {
    add_ranked(out, g, predicted, params.alpha(g.num_nodes), top_k, "alpha");
  }
  if (params.uses_propagation()) {
    const Matrix conf = params.inductive()
                            ? Matrix(teacher::sparse_features(g, conf_row_normalize) * params.z)
                            : params.conf;
    if (conf.rows() == g.num_nodes) add_ranked(out, g, predicted, conf, top_k, "conf");
  }
  return out;
}

double mean_agreement(std::span<const CaseStudy> cases, const std::string& kind) {
  double total = 0.0;
  int count = 0;
  for (const auto& c : cases) {
    if (c.kind == kind) {
      total += c.agreement;
      ++count;
    }
  }
  return count == 0 ? 0.0 : total / count;
}

void write_cases_json(const std::filesystem::path& path, std::span<const CaseStudy> cases) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& c : cases) {
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& [u, v] : c.ego_edges) edges.push_back({u, v});
    list.push_back({{"node", c.node},
                    {"kind", c.kind},
                    {"rank", c.rank},
                    {"value", c.value},
                    {"agreement", c.agreement},
                    {"ego_nodes", c.ego_nodes},
                    {"ego_edges", edges},
                    {"predicted", c.predicted}});
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  tsv::write_file(path, list.dump(2) + "\n");
}

void write_cases_dot(const std::filesystem::path& path, std::span<const CaseStudy> cases) {
  // Fixed palette indexed by predicted class; wraps for many classes.
  static constexpr const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                            "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  std::string text;
  for (const auto& c : cases) {
    text += "graph \"" + c.kind + "_" + std::to_string(c.rank) + "_node" + std::to_string(c.node) + "\" {\n";
    text += "  label=\"" + c.kind + " value=" + format_real(c.value) + " agreement=" + format_real(c.agreement) +
            "\";\n";
    for (std::size_t i = 0; i < c.ego_nodes.size(); ++i) {
      const int cls = c.predicted[i];
      text += "  n" + std::to_string(c.ego_nodes[i]) + " [label=\"" + std::to_string(c.ego_nodes[i]) + ":" +
              std::to_string(cls) + "\", style=filled, fillcolor=\"" + palette[cls % 10] + "\", class=" +
              std::to_string(cls) + (i == 0 ? ", shape=doublecircle" : "") + "];\n";
    }
    for (const auto& [u, v] : c.ego_edges) text += "  n" + std::to_string(u) + " -- n" + std::to_string(v) + ";\n";
    text += "}\n";
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  tsv::write_file(path, text);
}

}  // namespace cpf
