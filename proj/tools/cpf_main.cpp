#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "cpf/cli.hpp"

namespace {

struct Flags {
  std::string config;
  std::vector<std::string> assignments;
  std::map<std::string, std::string> values;  // setting key -> flag text
  std::vector<std::string> runs;
  bool synthetic = false;
  bool resplit = false;
};

void add_common(CLI::App* sub, Flags& f) {
  auto opt = [&](const std::string& name, const std::string& key, const std::string& help) {
    sub->add_option(name, f.values[key], help);
  };
  sub->add_option("--config", f.config, "key=value config file; flags override it");
  sub->add_option("--set", f.assignments, "extra key=value setting, e.g. student.lr=0.01");
  opt("--dataset", "dataset", "bundle directory");
  opt("--out", "out", "output directory (default $CPF_OUT/<command> or runs/<command>)");
  opt("--teacher", "teacher", "builtin:gcn | builtin:sgc | file:<soft_labels.tsv>");
  opt("--variant", "variant", "plp | ft | cpf-ind | cpf-tra | all, or a comma list");
  opt("--seed,--seeds", "seeds", "seed, list (1,2,3) or range (1..5)");
  opt("--k", "k", "propagation layers to sweep, e.g. 5..10");
  opt("--labeled-per-class", "labeled_per_class", "labeled nodes per class (list for sweep-labels)");
  opt("--grid", "grid", "none | full | random:<N>");
  opt("--jobs", "jobs", "parallel grid workers");
  opt("--top-k", "top_k", "nodes per interpretability ranking");
  opt("--student", "student_file", "trained student.tsv to explain");
  sub->add_flag("--resplit", f.resplit, "draw a fresh split even if the bundle has one");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distill graph neural network teachers into propagation/feature students"};
  app.set_version_flag("--version", cpf::cli::version());
  app.require_subcommand(1);

  Flags flags;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"prepare", "normalize a dataset bundle (or generate a synthetic one) and fix its split"},
      {"train-teacher", "train a builtin teacher and write its soft labels"},
      {"distill", "distill a teacher into one or more student variants"},
      {"sweep-k", "accuracy per number of propagation layers"},
      {"sweep-labels", "teacher and student accuracy per labeled-nodes-per-class ratio"},
      {"explain", "rank nodes by learned balance and confidence with their ego graphs"},
      {"report", "aggregate report.tsv files of several runs"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub, flags);
    if (name == "prepare") sub->add_flag("--synthetic", flags.synthetic, "generate a synthetic graph");
    if (name == "report") sub->add_option("runs", flags.runs, "run directories containing report.tsv");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  CLI::App* sub = app.get_subcommands().front();
  cpf::cli::Settings settings;
  try {
    if (!flags.config.empty()) cpf::cli::load_config_file(flags.config, settings);
    for (const auto& a : flags.assignments) cpf::cli::apply_assignment(settings, a);
    for (const auto& [key, value] : flags.values) {
      static const std::map<std::string, std::string> flag_of = {
          {"dataset", "--dataset"}, {"out", "--out"},        {"teacher", "--teacher"},
          {"variant", "--variant"}, {"seeds", "--seed"},     {"k", "--k"},
          {"labeled_per_class", "--labeled-per-class"},      {"grid", "--grid"},
          {"jobs", "--jobs"},       {"top_k", "--top-k"},    {"student_file", "--student"}};
      if (sub->count(flag_of.at(key)) > 0) settings[key] = value;
    }
    if (flags.synthetic) settings["synthetic"] = "true";
    if (flags.resplit) settings["resplit"] = "true";
    if (!flags.runs.empty()) {
      std::string joined;
      for (const auto& r : flags.runs) joined += (joined.empty() ? "" : ",") + r;
      settings["runs"] = joined;
    }
  } catch (const cpf::cli::ConfigError& e) {
    std::cerr << "cpf " << command << ": invalid config: " << e.what() << '\n';
    return 1;
  }
  return cpf::cli::run_command(command, settings);
}
