#include <stdexcept>

#include "cpf/autodiff.hpp"

namespace cpf::ad {

std::string_view op_name(Op op) {
  switch (op) {
    case Op::constant: return "constant";
    case Op::parameter: return "parameter";
    case Op::matmul: return "matmul";
    case Op::spmm: return "spmm";
    case Op::add: return "add";
    case Op::sub: return "sub";
    case Op::add_row: return "add_row";
    case Op::mul_elem: return "mul_elem";
    case Op::mul_col: return "mul_col";
    case Op::scale: return "scale";
    case Op::one_minus: return "one_minus";
    case Op::relu: return "relu";
    case Op::sigmoid: return "sigmoid";
    case Op::row_softmax: return "row_softmax";
    case Op::dropout: return "dropout";
    case Op::gather_rows: return "gather_rows";
    case Op::scatter_rows: return "scatter_rows";
    case Op::l2_row_norm_sum: return "l2_row_norm_sum";
    case Op::cross_entropy_rows: return "cross_entropy_rows";
    case Op::sum: return "sum";
    case Op::neighborhood_softmax_aggregate: return "neighborhood_softmax_aggregate";
  }
  return "unknown";
}

const Matrix& Var::value() const { return tape->value(*this); }
const Matrix& Var::grad() const { return tape->grad(*this); }

Var Tape::constant(Matrix value) { return record(Op::constant, std::move(value), {}, nullptr); }

Var Tape::parameter(Matrix value) {
  Var v = record(Op::parameter, std::move(value), {}, nullptr);
  nodes_[v.id].requires_grad = true;
  return v;
}

Var Tape::record(Op op, Matrix value, std::vector<std::size_t> parents, BackwardFn fn) {
  if (backward_done_) throw std::logic_error("tape already differentiated; reset() before recording");
  Node node;
  node.value = std::move(value);
  node.op = op;
  for (std::size_t p : parents) {
    if (p >= nodes_.size()) throw std::logic_error("parent recorded after child");
    node.requires_grad = node.requires_grad || nodes_[p].requires_grad;
  }
  node.parents = std::move(parents);
  if (node.requires_grad) node.backward = std::move(fn);
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

void Tape::backward(Var loss) {
  if (backward_done_) throw std::logic_error("backward called twice without tape reset");
  if (loss.tape != this || loss.id >= nodes_.size()) throw std::invalid_argument("loss is not on this tape");
  const Matrix& lv = nodes_[loss.id].value;
  if (lv.rows() != 1 || lv.cols() != 1) throw std::invalid_argument("backward needs a 1x1 loss");
  backward_done_ = true;

  for (auto& node : nodes_) node.grad = Matrix::Zero(node.value.rows(), node.value.cols());
  nodes_[loss.id].grad(0, 0) = 1.0;
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (node.requires_grad && node.backward) node.backward(*this, id);
  }
}

void Tape::reset() {
  nodes_.clear();
  backward_done_ = false;
}

}  // namespace cpf::ad
