#include <cmath>

#include "cpf/bundle.hpp"
#include "cpf/teacher.hpp"
#include "tsv.hpp"

namespace cpf {

void write_soft_labels(const SoftLabelMatrix& m, const std::filesystem::path& path) {
  std::string text = "#source=" + m.source + "\t#classes=" + std::to_string(m.probs.cols()) + "\n";
  for (Index r = 0; r < m.probs.rows(); ++r) {
    for (Index c = 0; c < m.probs.cols(); ++c) {
      if (c > 0) text += '\t';
      text += format_real(m.probs(r, c));
    }
    text += '\n';
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  tsv::write_file(path, text);
}

SoftLabelMatrix read_soft_labels(const std::filesystem::path& path, const Graph& g,
                                 const SoftLabelReadOptions& options) {
  const std::string name = path.string();
  const std::string content = tsv::read_file(path);
  const auto all = tsv::lines(content, true);
  if (all.empty() || all.front().text.front() != '#') throw ParseError(name, 1, "missing #source header");

  SoftLabelMatrix m;
  Index classes = -1;
  for (auto cell : tsv::fields(all.front().text)) {
    if (cell.starts_with("#source=")) {
      m.source = std::string(cell.substr(8));
    } else if (cell.starts_with("#classes=")) {
      if (!tsv::parse_int(cell.substr(9), classes)) throw ParseError(name, 1, "malformed #classes");
    }
  }
  if (classes < 0) throw ParseError(name, 1, "header lacks #classes");
  if (classes != g.num_classes) {
    throw ParseError(name, 1, "class count " + std::to_string(classes) + " does not match graph (" +
                                  std::to_string(g.num_classes) + ")");
  }
  if (!m.source.starts_with("builtin:") && !m.source.starts_with("external:")) m.source = "external:" + m.source;

  std::vector<tsv::Line> rows;
  for (std::size_t i = 1; i < all.size(); ++i) {
    if (all[i].text.front() != '#') rows.push_back(all[i]);
  }
  if (static_cast<Index>(rows.size()) != g.num_nodes) {
    throw ParseError(name, 0, "row count " + std::to_string(rows.size()) + " does not match node count " +
                                  std::to_string(g.num_nodes));
  }
  m.probs.resize(g.num_nodes, classes);
  for (Index r = 0; r < g.num_nodes; ++r) {
    const auto cells = tsv::fields(rows[r].text);
    if (static_cast<Index>(cells.size()) != classes) throw ParseError(name, rows[r].number, "wrong number of classes");
    double total = 0.0;
    for (Index c = 0; c < classes; ++c) {
      double p = 0.0;
      if (!tsv::parse_real(cells[c], p) || !std::isfinite(p)) throw ParseError(name, rows[r].number, "malformed probability");
      if (p < 0.0) throw ParseError(name, rows[r].number, "negative probability");
      m.probs(r, c) = p;
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-4) {
      throw ParseError(name, rows[r].number, "row sums to " + format_real(total) + ", expected 1");
    }
  }

  if (options.split != nullptr) {
    if (options.clamp) {
      clamp_labeled(m, g, options.split->train);
    } else {
      for (Index v : options.split->train) {
        for (Index c = 0; c < classes; ++c) {
          const double expect = c == g.labels[v] ? 1.0 : 0.0;
          if (std::abs(m.probs(v, c) - expect) > 1e-6) {
            throw ParseError(name, rows[v].number, "labeled node " + std::to_string(v) + " is not one-hot on its label");
          }
        }
      }
    }
  }
  return m;
}

}  // namespace cpf
