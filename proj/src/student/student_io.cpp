#include <array>
#include <charconv>
#include <cmath>

#include "cpf/bundle.hpp"
#include "cpf/student.hpp"
#include "tsv.hpp"

namespace cpf::student {

namespace {

// Shortest text that reads back to the same double.
std::string exact_real(double value) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

void append_matrix(std::string& text, const std::string& name, const Matrix& m) {
  text += "#" + name + "\t" + std::to_string(m.rows()) + "\t" + std::to_string(m.cols()) + "\n";
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (c > 0) text += '\t';
      text += exact_real(m(r, c));
    }
    text += '\n';
  }
}

std::string balance_name(Balance b) {
  switch (b) {
    case Balance::learned: return "learned";
    case Balance::all_one: return "one";
    case Balance::all_zero: return "zero";
  }
  return "learned";
}

Balance balance_from_name(const std::string& name) {
  if (name == "learned") return Balance::learned;
  if (name == "one") return Balance::all_one;
  if (name == "zero") return Balance::all_zero;
  throw std::invalid_argument("unknown balance '" + name + "'");
}

}  // namespace

void write_student(const StudentParams& p, const std::filesystem::path& path) {
  std::string text = "#variant=" + to_string(p.variant) + "\t#K=" + std::to_string(p.layers) +
                     "\t#d_mlp=" + std::to_string(p.w1.cols()) + "\t#dr=" + format_real(p.dropout) +
                     "\t#seed=" + std::to_string(p.seed) + "\t#balance=" + balance_name(p.balance) + "\n";
  if (p.alpha_logit.size() > 0) append_matrix(text, "alpha", p.alpha_logit);
  if (p.conf.size() > 0) append_matrix(text, "conf", p.conf);
  if (p.z.size() > 0) append_matrix(text, "z", p.z);
  if (p.w1.size() > 0) {
    text += "#mlp\n";
    append_matrix(text, "w1", p.w1);
    append_matrix(text, "b1", p.b1);
    append_matrix(text, "w2", p.w2);
    append_matrix(text, "b2", p.b2);
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  tsv::write_file(path, text);
}

StudentParams read_student(const std::filesystem::path& path) {
  const std::string name = path.string();
  const std::string content = tsv::read_file(path);
  const auto all = tsv::lines(content, true);
  if (all.empty() || !all.front().text.starts_with("#variant=")) throw ParseError(name, 1, "missing #variant header");

  StudentParams p;
  bool has_balance = false;
  try {
    for (auto cell : tsv::fields(all.front().text)) {
      const auto eq = cell.find('=');
      if (!cell.starts_with("#") || eq == std::string_view::npos) throw ParseError(name, 1, "malformed header cell");
      const std::string key(cell.substr(1, eq - 1));
      const std::string value(cell.substr(eq + 1));
      if (key == "variant") {
        p.variant = variant_from_string(value);
      } else if (key == "K") {
        if (!tsv::parse_int(value, p.layers) || p.layers < 1) throw ParseError(name, 1, "malformed K");
      } else if (key == "dr") {
        if (!tsv::parse_real(value, p.dropout)) throw ParseError(name, 1, "malformed dr");
      } else if (key == "seed") {
        if (!tsv::parse_int(value, p.seed)) throw ParseError(name, 1, "malformed seed");
      } else if (key == "balance") {
        p.balance = balance_from_name(value);
        has_balance = true;
      }
    }
  } catch (const std::invalid_argument& e) {
    throw ParseError(name, 1, e.what());
  }
  if (!has_balance) p.balance = balance_for(p.variant);

  for (std::size_t i = 1; i < all.size();) {
    const auto& head = all[i];
    if (head.text == "#mlp") {
      ++i;
      continue;
    }
    const auto cells = tsv::fields(head.text);
    Index rows = 0;
    Index cols = 0;
    if (cells.size() != 3 || !cells[0].starts_with("#") || !tsv::parse_int(cells[1], rows) ||
        !tsv::parse_int(cells[2], cols) || rows < 0 || cols < 0) {
      throw ParseError(name, head.number, "expected '#<name>\\t<rows>\\t<cols>'");
    }
    const std::string section(cells[0].substr(1));
    Matrix* target = nullptr;
    if (section == "alpha") target = &p.alpha_logit;
    else if (section == "conf") target = &p.conf;
    else if (section == "z") target = &p.z;
    else if (section == "w1") target = &p.w1;
    else if (section == "b1") target = &p.b1;
    else if (section == "w2") target = &p.w2;
    else if (section == "b2") target = &p.b2;
    else throw ParseError(name, head.number, "unknown section '" + section + "'");
    if (i + static_cast<std::size_t>(rows) >= all.size()) {
      throw ParseError(name, head.number, "section '" + section + "' is truncated");
    }
    target->resize(rows, cols);
    for (Index r = 0; r < rows; ++r) {
      const auto& line = all[i + 1 + static_cast<std::size_t>(r)];
      const auto values = tsv::fields(line.text);
      if (static_cast<Index>(values.size()) != cols) throw ParseError(name, line.number, "wrong number of columns");
      for (Index c = 0; c < cols; ++c) {
        double x = 0.0;
        if (!tsv::parse_real(values[c], x) || !std::isfinite(x)) throw ParseError(name, line.number, "malformed value");
        (*target)(r, c) = x;
      }
    }
    i += 1 + static_cast<std::size_t>(rows);
  }

  const bool learned_alpha = p.variant == Variant::cpf_ind || p.variant == Variant::cpf_tra;
  if (learned_alpha && p.balance == Balance::learned && p.alpha_logit.size() == 0) {
    throw ParseError(name, 0, "missing #alpha section");
  }
  if (p.uses_propagation() && !p.inductive() && p.conf.size() == 0) throw ParseError(name, 0, "missing #conf section");
  if (p.inductive() && p.z.size() == 0) throw ParseError(name, 0, "missing #z section");
  if (p.uses_features()) {
    if (p.w1.size() == 0 || p.w2.size() == 0 || p.b1.cols() != p.w1.cols() || p.w2.rows() != p.w1.cols() ||
        p.b2.cols() != p.w2.cols()) {
      throw ParseError(name, 0, "missing or inconsistent #mlp section");
    }
  }
  return p;
}

}  // namespace cpf::student
