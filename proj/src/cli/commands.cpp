#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>

#include "cpf/bundle.hpp"
#include "cpf/cli.hpp"
#include "cpf/experiment.hpp"
#include "cpf/metrics.hpp"

namespace cpf::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void log(const std::string& message) { std::cerr << "[cpf] " << message << '\n'; }

std::string num(double value) { return format_real(value); }

std::filesystem::path seed_dir(const RunConfig& c, std::uint64_t seed) {
  return c.seeds.size() == 1 ? c.out : c.out / ("seed-" + std::to_string(seed));
}

Split split_for(const Bundle& bundle, const RunConfig& c, std::uint64_t seed) {
  if (bundle.split && !c.resplit) return *bundle.split;
  SplitRequest request = c.split;
  request.seed = seed;
  return make_split(bundle.graph, request);
}

Bundle load_dataset(const RunConfig& c) {
  Bundle bundle = load_bundle(c.dataset);
  log("loaded " + c.dataset.string() + ": " + std::to_string(bundle.graph.num_nodes) + " nodes, " +
      std::to_string(bundle.graph.num_edges()) + " edges, " + std::to_string(bundle.graph.num_classes) + " classes");
  return bundle;
}

struct TeacherRun {
  SoftLabelMatrix soft;
  double test_acc = 0.0;
  double val_acc = 0.0;
  int best_epoch = 0;
  double seconds = 0.0;
  std::vector<EpochRecord> history;
};

TeacherRun obtain_teacher(const RunConfig& c, const Graph& g, const Split& split, std::uint64_t seed) {
  TeacherRun run;
  const auto start = Clock::now();
  if (c.teacher_source == TeacherSource::builtin) {
    auto result = teacher::train_teacher(g, split, c.teacher, seed);
    run.soft = std::move(result.soft_labels);
    run.test_acc = result.test_acc;
    run.val_acc = result.val_acc;
    run.best_epoch = result.best_epoch;
    run.history = std::move(result.history);
  } else {
    run.soft = read_soft_labels(c.teacher_file, g, {.split = &split, .clamp = true});
    if (!run.soft.source.starts_with("external:")) run.soft.source = "external:" + run.soft.source;
    run.test_acc = accuracy(run.soft.probs, g, split.test);
    run.val_acc = split.val.empty() ? 0.0 : accuracy(run.soft.probs, g, split.val);
  }
  run.seconds = seconds_since(start);
  log("teacher " + run.soft.source + " seed " + std::to_string(seed) + ": test acc " + num(run.test_acc));
  return run;
}

void add_teacher_fields(Report& r, const TeacherRun& t) {
  r.emplace_back("teacher_source", t.soft.source);
  r.emplace_back("teacher_acc", num(t.test_acc));
  r.emplace_back("teacher_val_acc", num(t.val_acc));
  r.emplace_back("teacher_best_epoch", std::to_string(t.best_epoch));
}

void add_split_fields(Report& r, const Split& split, std::uint64_t seed) {
  r.emplace_back("seed", std::to_string(seed));
  r.emplace_back("num_train", std::to_string(split.train.size()));
  r.emplace_back("num_val", std::to_string(split.val.size()));
  r.emplace_back("num_test", std::to_string(split.test.size()));
}

void write_history(const std::filesystem::path& path, const std::vector<EpochRecord>& history) {
  std::string text = "epoch\tloss\tval_acc\n";
  for (const auto& h : history) text += std::to_string(h.epoch) + "\t" + num(h.loss) + "\t" + num(h.val_acc) + "\n";
  std::filesystem::create_directories(path.parent_path());
  std::ofstream(path) << text;
}

std::optional<double> as_number(const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

// Mean and sample std of every numeric key shared by all reports; string
// keys are kept when all reports agree.
Report aggregate(const std::vector<Report>& reports) {
  Report out;
  out.emplace_back("n_runs", std::to_string(reports.size()));
  if (reports.empty()) return out;
  for (const auto& [key, first_value] : reports.front()) {
    std::vector<double> values;
    bool numeric = true;
    bool same = true;
    bool everywhere = true;
    for (const auto& report : reports) {
      auto it = std::find_if(report.begin(), report.end(), [&](const auto& kv) { return kv.first == key; });
      if (it == report.end()) {
        everywhere = false;
        break;
      }
      same = same && it->second == first_value;
      const auto v = as_number(it->second);
      if (v) values.push_back(*v);
      else numeric = false;
    }
    if (!everywhere) continue;
    if (key == "seed") {
      std::string seeds;
      for (const auto& report : reports) {
        auto it = std::find_if(report.begin(), report.end(), [](const auto& kv) { return kv.first == "seed"; });
        seeds += (seeds.empty() ? "" : ",") + it->second;
      }
      out.emplace_back("seeds", seeds);
    } else if (numeric) {
      const MeanStd ms = mean_std(values);
      out.emplace_back(key, num(ms.mean));
      out.emplace_back(key + "_std", num(ms.std));
    } else if (same) {
      out.emplace_back(key, first_value);
    }
  }
  return out;
}

SweepResult mean_sweep(const std::vector<SweepResult>& sweeps) {
  SweepResult out = sweeps.front();
  for (std::size_t i = 0; i < out.rows.size(); ++i) {
    std::vector<double> t, s, imp;
    for (const auto& sw : sweeps) {
      t.push_back(sw.rows[i].teacher_acc);
      s.push_back(sw.rows[i].student_acc);
      imp.push_back(sw.rows[i].improvement);
    }
    out.rows[i].teacher_acc = mean_std(t).mean;
    out.rows[i].student_acc = mean_std(s).mean;
    out.rows[i].improvement = mean_std(imp).mean;
  }
  std::vector<double> gaps;
  for (const auto& sw : sweeps) gaps.push_back(sw.max_gap);
  out.max_gap = mean_std(gaps).mean;
  return out;
}

void finish_seeds(const RunConfig& c, const std::vector<Report>& reports) {
  if (reports.size() > 1) write_report(c.out / "report.tsv", aggregate(reports));
}

void write_grid_trials(const std::filesystem::path& path, const student::GridResult& grid) {
  std::string text = "trial\tK\thidden\tdropout\tlr\twd\tval_acc\ttest_acc\tbest_epoch\tdiverged\n";
  for (const auto& t : grid.trials) {
    text += std::to_string(t.index) + "\t" + std::to_string(t.hp.layers) + "\t" + std::to_string(t.hp.hidden) + "\t" +
            num(t.hp.dropout) + "\t" + num(t.hp.lr) + "\t" + num(t.hp.weight_decay) + "\t" + num(t.val_acc) + "\t" +
            num(t.test_acc) + "\t" + std::to_string(t.best_epoch) + "\t" + (t.diverged ? "1" : "0") + "\n";
  }
  std::ofstream(path) << text;
}

}  // namespace

void run_prepare(const RunConfig& c) {
  Bundle bundle;
  if (c.synthetic) {
    bundle.graph = make_synthetic_graph(c.synthetic_spec);
    bundle.raw_num_nodes = bundle.graph.num_nodes;
    bundle.raw_num_edges = bundle.graph.num_edges();
    bundle.meta = {{"name", "synthetic"}};
  } else {
    bundle = load_dataset(c);
  }
  const Split split = split_for(bundle, c, c.seeds.front());
  MetaTable meta = bundle.meta;
  std::erase_if(meta, [](const auto& kv) { return kv.first == "num_classes"; });
  write_bundle(c.out, bundle.graph, &split, meta);

  Report r;
  r.emplace_back("num_nodes", std::to_string(bundle.graph.num_nodes));
  r.emplace_back("num_edges", std::to_string(bundle.graph.num_edges()));
  r.emplace_back("feature_dim", std::to_string(bundle.graph.feature_dim()));
  r.emplace_back("num_classes", std::to_string(bundle.graph.num_classes));
  r.emplace_back("raw_num_nodes", std::to_string(bundle.raw_num_nodes));
  r.emplace_back("raw_num_edges", std::to_string(bundle.raw_num_edges));
  add_split_fields(r, split, c.seeds.front());
  write_report(c.out / "report.tsv", r);
  log("wrote bundle to " + c.out.string());
}

void run_train_teacher(const RunConfig& c) {
  const Bundle bundle = load_dataset(c);
  const Graph& g = bundle.graph;
  std::vector<Report> reports;
  for (std::uint64_t seed : c.seeds) {
    const auto dir = seed_dir(c, seed);
    const Split split = split_for(bundle, c, seed);
    const TeacherRun t = obtain_teacher(c, g, split, seed);
    write_soft_labels(t.soft, dir / "soft_labels.tsv");
    write_history(dir / "history.tsv", t.history);
    Report r;
    add_split_fields(r, split, seed);
    add_teacher_fields(r, t);
    write_report(dir / "report.tsv", r);
    write_report(dir / "timings.tsv", {{"teacher_seconds", num(t.seconds)}});
    reports.push_back(std::move(r));
  }
  finish_seeds(c, reports);
}

void run_distill(const RunConfig& c) {
  const Bundle bundle = load_dataset(c);
  const Graph& g = bundle.graph;
  std::vector<Report> reports;
  for (std::uint64_t seed : c.seeds) {
    const auto dir = seed_dir(c, seed);
    const Split split = split_for(bundle, c, seed);
    const TeacherRun t = obtain_teacher(c, g, split, seed);
    write_soft_labels(t.soft, dir / "soft_labels.tsv");

    Report r;
    add_split_fields(r, split, seed);
    add_teacher_fields(r, t);
    Report timings{{"teacher_seconds", num(t.seconds)}};
    double best_acc = -1.0;
    std::string best_variant;
    for (student::Variant variant : c.variants) {
      const std::string name = student::to_string(variant);
      const auto start = Clock::now();
      const student::GridResult grid = student::grid_search(g, split, t.soft, variant, c.grid, seed);
      timings.emplace_back("student_seconds." + name, num(seconds_since(start)));
      const auto& best = grid.best_trial();
      const auto& result = grid.best_result;
      const std::string file = c.variants.size() == 1 ? "student.tsv" : "student-" + name + ".tsv";
      student::write_student(result.params, dir / file);
      if (c.use_grid) write_grid_trials(dir / ("grid-" + name + ".tsv"), grid);
      r.emplace_back("student_acc." + name, num(result.test_acc));
      r.emplace_back("student_val_acc." + name, num(result.val_acc));
      r.emplace_back("improvement." + name, num(relative_improvement(result.test_acc, t.test_acc)));
      r.emplace_back("best_epoch." + name, std::to_string(result.best_epoch));
      r.emplace_back("K." + name, std::to_string(best.hp.layers));
      r.emplace_back("hidden." + name, std::to_string(best.hp.hidden));
      r.emplace_back("dropout." + name, num(best.hp.dropout));
      r.emplace_back("lr." + name, num(best.hp.lr));
      r.emplace_back("wd." + name, num(best.hp.weight_decay));
      r.emplace_back("trials." + name, std::to_string(grid.trials.size()));
      log(name + " seed " + std::to_string(seed) + ": test acc " + num(result.test_acc) + " (val " +
          num(result.val_acc) + ", " + std::to_string(grid.trials.size()) + " trials)");
      if (result.test_acc > best_acc) {
        best_acc = result.test_acc;
        best_variant = name;
      }
    }
    r.emplace_back("best_variant", best_variant);
    r.emplace_back("student_acc", num(best_acc));
    r.emplace_back("relative_improvement", num(relative_improvement(best_acc, t.test_acc)));
    write_report(dir / "report.tsv", r);
    write_report(dir / "timings.tsv", timings);
    reports.push_back(std::move(r));
  }
  finish_seeds(c, reports);
}

void run_sweep_k(const RunConfig& c) {
  const Bundle bundle = load_dataset(c);
  const Graph& g = bundle.graph;
  const student::Variant variant = c.variants.front();
  std::vector<Report> reports;
  std::vector<SweepResult> sweeps;
  for (std::uint64_t seed : c.seeds) {
    const auto dir = seed_dir(c, seed);
    const Split split = split_for(bundle, c, seed);
    const TeacherRun t = obtain_teacher(c, g, split, seed);
    SweepResult sweep = k_sweep(g, split, t.soft, t.test_acc, variant, c.ks, c.student, seed);
    write_sweep(dir / "sweep.tsv", sweep);
    double worst = 1.0;
    double best = 0.0;
    for (const auto& row : sweep.rows) {
      worst = std::min(worst, row.student_acc);
      best = std::max(best, row.student_acc);
    }
    Report r;
    add_split_fields(r, split, seed);
    add_teacher_fields(r, t);
    r.emplace_back("variant", student::to_string(variant));
    r.emplace_back("best_acc", num(best));
    r.emplace_back("worst_acc", num(worst));
    r.emplace_back("max_gap", num(sweep.max_gap));
    r.emplace_back("worst_minus_teacher", num(worst - t.test_acc));
    write_report(dir / "report.tsv", r);
    log("sweep-k seed " + std::to_string(seed) + ": gap " + num(sweep.max_gap));
    reports.push_back(std::move(r));
    sweeps.push_back(std::move(sweep));
  }
  if (sweeps.size() > 1) write_sweep(c.out / "sweep.tsv", mean_sweep(sweeps));
  finish_seeds(c, reports);
}

void run_sweep_labels(const RunConfig& c) {
  if (c.teacher_source != TeacherSource::builtin) {
    throw ConfigError("sweep-labels retrains the teacher per ratio and needs a builtin teacher");
  }
  const Bundle bundle = load_dataset(c);
  const Graph& g = bundle.graph;
  const student::Variant variant = c.variants.front();
  std::vector<Report> reports;
  std::vector<SweepResult> sweeps;
  for (std::uint64_t seed : c.seeds) {
    const auto dir = seed_dir(c, seed);
    SweepResult sweep = label_ratio_sweep(g, c.teacher, c.labeled_per_class, c.split, variant, c.student, seed);
    write_sweep(dir / "sweep.tsv", sweep);
    Report r;
    r.emplace_back("seed", std::to_string(seed));
    r.emplace_back("variant", student::to_string(variant));
    for (const auto& row : sweep.rows) {
      const std::string suffix = "." + std::to_string(row.setting);
      r.emplace_back("teacher_acc" + suffix, num(row.teacher_acc));
      r.emplace_back("student_acc" + suffix, num(row.student_acc));
      r.emplace_back("improvement" + suffix, num(row.improvement));
    }
    write_report(dir / "report.tsv", r);
    log("sweep-labels seed " + std::to_string(seed) + " done");
    reports.push_back(std::move(r));
    sweeps.push_back(std::move(sweep));
  }
  if (sweeps.size() > 1) write_sweep(c.out / "sweep.tsv", mean_sweep(sweeps));
  finish_seeds(c, reports);
}

void run_explain(const RunConfig& c) {
  const Bundle bundle = load_dataset(c);
  const Graph& g = bundle.graph;
  std::vector<Report> reports;
  for (std::uint64_t seed : c.seeds) {
    const auto dir = seed_dir(c, seed);
    const Split split = split_for(bundle, c, seed);
    Report r;
    add_split_fields(r, split, seed);
    student::StudentParams params;
    if (!c.student_file.empty()) {
      params = student::read_student(c.student_file);
      if (params.uses_features() && params.w1.rows() != g.feature_dim()) {
        throw ConfigError("student file does not match the dataset's feature dimension");
      }
    } else {
      const TeacherRun t = obtain_teacher(c, g, split, seed);
      add_teacher_fields(r, t);
      params = student::train_student(g, split, t.soft, c.variants.front(), c.student, seed).params;
      student::write_student(params, dir / "student.tsv");
    }
    const auto inputs = student::make_student_inputs(g, split, c.student);
    const auto pred = student::cpf_forward(inputs, params);
    const auto cases = rank_interpretability(params, pred, g, c.top_k, c.student.conf_row_normalize);
    write_cases_json(dir / "cases.json", cases);
    write_cases_dot(dir / "cases.dot", cases);
    r.emplace_back("variant", student::to_string(params.variant));
    r.emplace_back("student_acc", num(accuracy(pred.probs, g, split.test)));
    std::set<std::string> kinds;
    for (const auto& cs : cases) kinds.insert(cs.kind);
    for (const auto& kind : kinds) r.emplace_back("agreement." + kind, num(mean_agreement(cases, kind)));
    for (const std::string name : {"alpha", "conf"}) {
      if (kinds.contains(name + "_top")) {
        r.emplace_back(name + "_agreement_gap",
                       num(mean_agreement(cases, name + "_top") - mean_agreement(cases, name + "_bottom")));
      }
    }
    write_report(dir / "report.tsv", r);
    log("explain seed " + std::to_string(seed) + ": " + std::to_string(cases.size()) + " cases");
    reports.push_back(std::move(r));
  }
  finish_seeds(c, reports);
}

void run_report(const RunConfig& c) {
  std::vector<Report> reports;
  for (const auto& dir : c.runs) reports.push_back(read_report(dir / "report.tsv"));
  write_report(c.out / "report.tsv", aggregate(reports));
}

int run_command(const std::string& command, const Settings& settings) {
  const auto start = Clock::now();
  RunConfig config;
  try {
    config = resolve(command, settings);
  } catch (const ConfigError& e) {
    std::cerr << "cpf " << command << ": invalid config: " << e.what() << '\n';
    return 1;
  }
  try {
    if (command == "prepare") run_prepare(config);
    else if (command == "train-teacher") run_train_teacher(config);
    else if (command == "distill") run_distill(config);
    else if (command == "sweep-k") run_sweep_k(config);
    else if (command == "sweep-labels") run_sweep_labels(config);
    else if (command == "explain") run_explain(config);
    else if (command == "report") run_report(config);
    else throw ConfigError("unknown subcommand '" + command + "'");
    write_manifest(config, seconds_since(start));
  } catch (const ConfigError& e) {
    std::cerr << "cpf " << command << ": invalid config: " << e.what() << '\n';
    return 1;
  } catch (const TrainingDiverged& e) {
    std::cerr << "cpf " << command << ": training diverged: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "cpf " << command << ": " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace cpf::cli
