#pragma once

// Reverse-mode automatic differentiation over dense row-major matrices.
//
// A Tape records every operation in construction order (parents always
// precede children). backward() walks the tape once in reverse and
// accumulates cotangents by addition. A tape is single-threaded; independent
// tapes may run concurrently.

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "cpf/graph.hpp"
#include "cpf/rng.hpp"
#include "cpf/types.hpp"

namespace cpf::ad {

enum class Op : std::uint8_t {
  constant,
  parameter,
  matmul,
  spmm,
  add,
  sub,
  add_row,
  mul_elem,
  mul_col,
  scale,
  one_minus,
  relu,
  sigmoid,
  row_softmax,
  dropout,
  gather_rows,
  scatter_rows,
  l2_row_norm_sum,
  cross_entropy_rows,
  sum,
  neighborhood_softmax_aggregate,
};

std::string_view op_name(Op op);

class Tape;

/// Handle to a value recorded on a tape. Cheap to copy.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Matrix& value() const;
  /// Valid after Tape::backward.
  const Matrix& grad() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  /// Leaf that receives a gradient.
  Var parameter(Matrix value);

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  const Matrix& grad(Var v) const { return nodes_[v.id].grad; }
  Op op(Var v) const { return nodes_[v.id].op; }
  std::span<const std::size_t> parents(Var v) const { return nodes_[v.id].parents; }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  /// Seeds d(loss)/d(loss) = 1 and propagates to every node. loss must be
  /// 1x1. Throws std::logic_error when called twice without reset().
  void backward(Var loss);

  /// Drops all nodes; handles from before the reset become invalid.
  void reset();

  // Interface for op implementations.
  Var record(Op op, Matrix value, std::vector<std::size_t> parents, BackwardFn fn);
  const Matrix& value_at(std::size_t id) const { return nodes_[id].value; }
  const Matrix& grad_at(std::size_t id) const { return nodes_[id].grad; }
  Matrix& grad_mut(std::size_t id) { return nodes_[id].grad; }
  bool needs_grad(std::size_t id) const { return nodes_[id].requires_grad; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Op op = Op::constant;
    std::vector<std::size_t> parents;
    bool requires_grad = false;
    BackwardFn backward;
  };

  std::deque<Node> nodes_;  // deque: references stay valid while recording
  bool backward_done_ = false;
};

// Forward ops. All throw std::invalid_argument on shape mismatch.

Var matmul(Var a, Var b);
/// Constant sparse matrix times a dense value.
Var spmm(std::shared_ptr<const SparseMatrix> s, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
/// a + broadcast of the 1 x cols row vector to every row.
Var add_row(Var a, Var row);
Var mul_elem(Var a, Var b);
/// Scales row r of m by col(r, 0).
Var mul_col(Var col, Var m);
Var scale(Var a, double factor);
Var one_minus(Var a);
Var relu(Var a);
Var sigmoid(Var a);
/// Softmax per row, computed with the row max subtracted.
Var row_softmax(Var a);
/// Inverted dropout: kept entries scaled by 1/(1-rate) in training mode,
/// identity (the same handle) otherwise. rate must lie in [0, 1).
Var dropout(Var a, double rate, bool training, Rng& rng);
Var gather_rows(Var a, std::span<const Index> rows);
/// Copy of base with base.row(rows[i]) replaced by src.row(i).
Var scatter_rows(Var base, std::span<const Index> rows, Var src);
/// Sum over rows of the Euclidean row norm. The derivative uses
/// sqrt(|row|^2 + eps) so that all-zero rows stay finite.
Var l2_row_norm_sum(Var a, double eps = 1e-12);
/// Mean over `rows` of -log softmax(logits)[row, labels[row]].
Var cross_entropy_rows(Var logits, std::span<const Index> rows, std::span<const int> labels);
Var sum(Var a);

/// out(v) = sum over u in N(v) + {v} of softmax_u(scores) * values(u), where
/// the softmax runs over the sources of each target v. scores is
/// num_nodes x 1; g must outlive the tape.
Var neighborhood_softmax_aggregate(const Graph& g, Var scores, Var values);

// Constant helpers (no tape involved).

/// Inverted dropout applied to the stored entries of a sparse matrix.
SparseMatrix dropout_sparse(const SparseMatrix& s, double rate, Rng& rng);
Matrix row_softmax(const Matrix& a);

}  // namespace cpf::ad
