#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cpf/cli.hpp"

namespace cpf::cli {

Settings default_settings() {
  return {
      {"dataset", ""},
      {"out", ""},
      {"teacher", "builtin:gcn"},
      {"variant", "cpf-ind"},
      {"seeds", "1"},
      {"k", "5..10"},
      {"labeled_per_class", ""},
      {"grid", "none"},
      {"jobs", "1"},
      {"top_k", "10"},
      {"student_file", ""},
      {"resplit", "false"},
      {"runs", ""},
      {"synthetic", "false"},
      {"split.val_count", "30"},
      {"split.val_mode", "per_class"},
      {"teacher.hidden", "64"},
      {"teacher.dropout", "auto"},
      {"teacher.lr", "auto"},
      {"teacher.wd", "auto"},
      {"teacher.power", "2"},
      {"teacher.max_epochs", "500"},
      {"teacher.patience", "50"},
      {"teacher.normalize_features", "true"},
      {"teacher.clamp_validation", "false"},
      {"student.layers", "10"},
      {"student.hidden", "64"},
      {"student.dropout", "0.5"},
      {"student.lr", "0.005"},
      {"student.wd", "0.0005"},
      {"student.max_epochs", "1000"},
      {"student.patience", "50"},
      {"student.ft_row_normalize", "true"},
      {"student.conf_row_normalize", "false"},
      {"grid.layers", "5..10"},
      {"grid.hidden", "8,16,32,64"},
      {"grid.dropout", "0.2,0.5,0.8"},
      {"grid.lr", "0.001,0.005,0.01"},
      {"grid.wd", "0.0005,0.001,0.01"},
      {"grid.seed", "0"},
      {"synthetic.nodes", "1000"},
      {"synthetic.classes", "4"},
      {"synthetic.dim", "64"},
      {"synthetic.degree", "4"},
      {"synthetic.homophily", "0.8"},
      {"synthetic.density", "0.05"},
      {"synthetic.signal", "0.25"},
  };
}

void set_setting(Settings& settings, const std::string& key, const std::string& value) {
  static const Settings known = default_settings();
  if (!known.contains(key)) throw ConfigError("unknown setting '" + key + "'");
  settings[key] = value;
}

static std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

void apply_assignment(Settings& settings, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + assignment + "'");
  set_setting(settings, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void load_config_file(const std::filesystem::path& path, Settings& settings) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    if (line.starts_with("run.")) continue;
    try {
      apply_assignment(settings, line);
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
}

namespace {

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ConfigError("setting '" + key + "': cannot parse '" + text + "'");
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("setting '" + key + "': expected true or false, got '" + text + "'");
}

std::vector<double> parse_real_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_commas(text)) out.push_back(parse_number<double>(key, item));
  if (out.empty()) throw ConfigError("setting '" + key + "' is empty");
  return out;
}

}  // namespace

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  for (const auto& item : split_commas(text)) {
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      out.push_back(parse_number<int>("list", item));
      continue;
    }
    const int lo = parse_number<int>("list", item.substr(0, dots));
    const int hi = parse_number<int>("list", item.substr(dots + 2));
    if (hi < lo) throw ConfigError("empty range '" + item + "'");
    for (int v = lo; v <= hi; ++v) out.push_back(v);
  }
  if (out.empty()) throw ConfigError("empty integer list '" + text + "'");
  return out;
}

std::string version() { return CPF_VERSION; }

RunConfig resolve(const std::string& command, const Settings& input) {
  Settings s = default_settings();
  for (const auto& [key, value] : input) set_setting(s, key, value);
  auto get = [&](const std::string& key) -> const std::string& { return s.at(key); };
  auto integer = [&](const std::string& key) { return parse_number<long long>(key, get(key)); };
  auto real = [&](const std::string& key) { return parse_number<double>(key, get(key)); };
  auto flag = [&](const std::string& key) { return parse_bool(key, get(key)); };
  auto positive = [&](const std::string& key) {
    const long long v = integer(key);
    if (v < 1) throw ConfigError("setting '" + key + "' must be positive");
    return v;
  };

  RunConfig c;
  c.command = command;

  if (get("out").empty()) {
    const char* root = std::getenv("CPF_OUT");
    s["out"] = (std::filesystem::path(root && *root ? root : "runs") / command).string();
  }
  c.out = get("out");

  c.synthetic = flag("synthetic");
  c.dataset = get("dataset");
  const bool needs_dataset = command != "report" && !(command == "prepare" && c.synthetic);
  if (needs_dataset) {
    if (c.dataset.empty()) throw ConfigError("--dataset is required");
    if (!std::filesystem::is_directory(c.dataset)) {
      throw ConfigError("dataset directory '" + c.dataset.string() + "' does not exist");
    }
  }

  try {
    for (int seed : parse_int_list(get("seeds"))) {
      if (seed < 0) throw ConfigError("seeds must be nonnegative");
      c.seeds.push_back(static_cast<std::uint64_t>(seed));
    }
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("setting 'seeds': ") + e.what());
  }

  const std::string teacher_spec = get("teacher");
  if (teacher_spec.starts_with("builtin:")) {
    try {
      c.teacher = teacher::default_teacher_config(teacher::teacher_kind_from_string(teacher_spec.substr(8)));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  } else if (teacher_spec.starts_with("file:")) {
    c.teacher_source = TeacherSource::file;
    c.teacher_file = teacher_spec.substr(5);
    if (command != "prepare" && command != "report" && command != "train-teacher" &&
        !std::filesystem::is_regular_file(c.teacher_file)) {
      throw ConfigError("teacher file '" + c.teacher_file.string() + "' does not exist");
    }
  } else {
    throw ConfigError("teacher must be builtin:gcn, builtin:sgc or file:<path>");
  }
  if (command == "train-teacher" && c.teacher_source == TeacherSource::file) {
    throw ConfigError("train-teacher needs a builtin teacher");
  }
  c.teacher.hidden = positive("teacher.hidden");
  if (get("teacher.dropout") != "auto") c.teacher.dropout = real("teacher.dropout");
  if (get("teacher.lr") != "auto") c.teacher.lr = real("teacher.lr");
  if (get("teacher.wd") != "auto") c.teacher.weight_decay = real("teacher.wd");
  c.teacher.sgc_power = static_cast<int>(positive("teacher.power"));
  c.teacher.max_epochs = static_cast<int>(positive("teacher.max_epochs"));
  c.teacher.patience = static_cast<int>(positive("teacher.patience"));
  c.teacher.normalize_features = flag("teacher.normalize_features");
  c.teacher.clamp_validation = flag("teacher.clamp_validation");
  if (c.teacher.dropout < 0.0 || c.teacher.dropout >= 1.0) throw ConfigError("teacher.dropout must lie in [0, 1)");
  if (c.teacher.lr <= 0.0) throw ConfigError("teacher.lr must be positive");

  const std::string variant = get("variant");
  try {
    if (variant == "all") {
      c.variants = {student::Variant::plp, student::Variant::ft, student::Variant::cpf_ind, student::Variant::cpf_tra};
    } else {
      std::stringstream ss(variant);
      std::string item;
      while (std::getline(ss, item, ',')) c.variants.push_back(student::variant_from_string(trim(item)));
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (c.variants.empty()) throw ConfigError("no student variant given");

  c.ks = parse_int_list(get("k"));
  for (int k : c.ks) {
    if (k < 1) throw ConfigError("K values must be positive");
  }
  const std::string lpc = get("labeled_per_class");
  for (int v : parse_int_list(lpc.empty() ? (command == "sweep-labels" ? "5,10,20,50" : "20") : lpc)) {
    if (v < 1) throw ConfigError("labeled_per_class must be positive");
    c.labeled_per_class.push_back(v);
  }
  c.split.labeled_per_class = c.labeled_per_class.front();
  c.split.val_count = integer("split.val_count");
  if (c.split.val_count < 0) throw ConfigError("split.val_count must be nonnegative");
  const std::string mode = get("split.val_mode");
  if (mode == "per_class") {
    c.split.val_mode = ValidationMode::per_class;
  } else if (mode == "total") {
    c.split.val_mode = ValidationMode::total;
  } else {
    throw ConfigError("split.val_mode must be per_class or total");
  }
  c.resplit = flag("resplit");

  c.student.layers = static_cast<int>(positive("student.layers"));
  c.student.hidden = positive("student.hidden");
  c.student.dropout = real("student.dropout");
  c.student.lr = real("student.lr");
  c.student.weight_decay = real("student.wd");
  c.student.max_epochs = static_cast<int>(positive("student.max_epochs"));
  c.student.patience = static_cast<int>(positive("student.patience"));
  c.student.ft_row_normalize = flag("student.ft_row_normalize");
  c.student.conf_row_normalize = flag("student.conf_row_normalize");
  if (c.student.dropout < 0.0 || c.student.dropout >= 1.0) throw ConfigError("student.dropout must lie in [0, 1)");
  if (c.student.lr <= 0.0) throw ConfigError("student.lr must be positive");

  c.jobs = static_cast<int>(positive("jobs"));
  const std::string grid = get("grid");
  if (grid == "none") {
    c.grid = student::single_grid(c.student);
  } else if (grid == "full" || grid.starts_with("random:")) {
    c.use_grid = true;
    c.grid.layers = parse_int_list(get("grid.layers"));
    for (int h : parse_int_list(get("grid.hidden"))) c.grid.hidden.push_back(h);
    c.grid.dropout = parse_real_list("grid.dropout", get("grid.dropout"));
    c.grid.lr = parse_real_list("grid.lr", get("grid.lr"));
    c.grid.weight_decay = parse_real_list("grid.wd", get("grid.wd"));
    c.grid.base = c.student;
    c.grid.seed = static_cast<std::uint64_t>(integer("grid.seed"));
    if (grid != "full") c.grid.max_trials = static_cast<std::size_t>(parse_number<long long>("grid", grid.substr(7)));
    if (grid != "full" && c.grid.max_trials == 0) throw ConfigError("grid random:N needs N >= 1");
  } else {
    throw ConfigError("grid must be none, full or random:<N>");
  }
  c.grid.jobs = c.jobs;

  c.top_k = positive("top_k");
  c.student_file = get("student_file");
  if (!c.student_file.empty() && !std::filesystem::is_regular_file(c.student_file)) {
    throw ConfigError("student file '" + c.student_file.string() + "' does not exist");
  }

  c.synthetic_spec.num_nodes = positive("synthetic.nodes");
  c.synthetic_spec.num_classes = static_cast<int>(positive("synthetic.classes"));
  c.synthetic_spec.feature_dim = positive("synthetic.dim");
  c.synthetic_spec.avg_degree = real("synthetic.degree");
  c.synthetic_spec.homophily = real("synthetic.homophily");
  c.synthetic_spec.feature_density = real("synthetic.density");
  c.synthetic_spec.feature_signal = real("synthetic.signal");
  c.synthetic_spec.seed = c.seeds.front();

  for (const auto& item : split_commas(get("runs"))) c.runs.emplace_back(item);
  if (command == "report") {
    if (c.runs.empty()) throw ConfigError("report needs at least one run directory");
    for (const auto& dir : c.runs) {
      if (!std::filesystem::is_regular_file(dir / "report.tsv")) {
        throw ConfigError("'" + dir.string() + "' has no report.tsv");
      }
    }
  }

  c.settings = std::move(s);
  return c;
}

void write_manifest(const RunConfig& config, double wall_seconds) {
  std::ostringstream out;
  out << "# re-run with: cpf " << config.command << " --config <this file>\n";
  for (const auto& [key, value] : config.settings) out << key << "=" << value << "\n";
  out << "run.command=" << config.command << "\n";
  out << "run.version=" << version() << "\n";
  out << "run.wall_seconds=" << wall_seconds << "\n";
  std::filesystem::create_directories(config.out);
  std::ofstream file(config.out / "manifest.cfg");
  file << out.str();
  if (!file) throw std::runtime_error("cannot write manifest in " + config.out.string());
}

}  // namespace cpf::cli
