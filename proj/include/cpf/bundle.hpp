#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cpf/graph.hpp"

namespace cpf {

/// Malformed bundle content; `line` is 1-based, 0 when not line-specific.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string file, std::size_t line, const std::string& message);

  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

using MetaTable = std::vector<std::pair<std::string, std::string>>;

/// A loaded dataset directory. When the input graph had several
/// components, `graph` holds the largest one and `split` is remapped to it.
struct Bundle {
  Graph graph;
  std::optional<Split> split;
  MetaTable meta;
  Index raw_num_nodes = 0;
  Index raw_num_edges = 0;  // undirected, after self-loop/duplicate removal
};

/// Reads edges.tsv, features.tsv, labels.tsv and the optional split.tsv /
/// meta.tsv. Throws ParseError on missing files or malformed content.
Bundle load_bundle(const std::filesystem::path& dir);

/// Writes the normalized form: sorted u < v edges, 9-significant-digit
/// features, split sorted by node index, meta with num_classes.
void write_bundle(const std::filesystem::path& dir, const Graph& g, const Split* split,
                  const MetaTable& meta = {});

/// Decimal text with up to 9 significant digits.
std::string format_real(double value);

std::optional<std::string> meta_value(const MetaTable& meta, const std::string& key);

}  // namespace cpf
