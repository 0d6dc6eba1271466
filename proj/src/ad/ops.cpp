#include <cmath>
#include <stdexcept>
#include <string>

#include "cpf/autodiff.hpp"

namespace cpf::ad {

namespace {

std::string shape(const Matrix& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

void require(bool ok, Op op, const std::string& what) {
  if (!ok) throw std::invalid_argument(std::string(op_name(op)) + ": " + what);
}

void same_tape(Var a, Var b, Op op) { require(a.tape == b.tape && a.tape != nullptr, op, "operands on different tapes"); }

void same_shape(const Matrix& a, const Matrix& b, Op op) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), op, "shape mismatch " + shape(a) + " vs " + shape(b));
}

void check_rows(std::span<const Index> rows, Index limit, Op op) {
  for (Index r : rows) require(r >= 0 && r < limit, op, "row index " + std::to_string(r) + " out of range");
}

}  // namespace

Var matmul(Var a, Var b) {
  same_tape(a, b, Op::matmul);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  require(av.cols() == bv.rows(), Op::matmul, "inner dimensions differ: " + shape(av) + " * " + shape(bv));
  Matrix out = av * bv;
  return a.tape->record(Op::matmul, std::move(out), {a.id, b.id}, [ia = a.id, ib = b.id](Tape& t, std::size_t self) {
    const Matrix& g = t.grad_at(self);
    if (t.needs_grad(ia)) t.grad_mut(ia).noalias() += g * t.value_at(ib).transpose();
    if (t.needs_grad(ib)) t.grad_mut(ib).noalias() += t.value_at(ia).transpose() * g;
  });
}

Var spmm(std::shared_ptr<const SparseMatrix> s, Var b) {
  require(s != nullptr, Op::spmm, "null sparse operand");
  const Matrix& bv = b.value();
  require(s->cols() == bv.rows(), Op::spmm, "inner dimensions differ");
  Matrix out = (*s) * bv;
  return b.tape->record(Op::spmm, std::move(out), {b.id}, [s, ib = b.id](Tape& t, std::size_t self) {
    t.grad_mut(ib).noalias() += s->transpose() * t.grad_at(self);
  });
}

Var add(Var a, Var b) {
  same_tape(a, b, Op::add);
  same_shape(a.value(), b.value(), Op::add);
  Matrix out = a.value() + b.value();
  return a.tape->record(Op::add, std::move(out), {a.id, b.id}, [ia = a.id, ib = b.id](Tape& t, std::size_t self) {
    if (t.needs_grad(ia)) t.grad_mut(ia) += t.grad_at(self);
    if (t.needs_grad(ib)) t.grad_mut(ib) += t.grad_at(self);
  });
}

Var sub(Var a, Var b) {
  same_tape(a, b, Op::sub);
  same_shape(a.value(), b.value(), Op::sub);
  Matrix out = a.value() - b.value();
  return a.tape->record(Op::sub, std::move(out), {a.id, b.id}, [ia = a.id, ib = b.id](Tape& t, std::size_t self) {
    if (t.needs_grad(ia)) t.grad_mut(ia) += t.grad_at(self);
    if (t.needs_grad(ib)) t.grad_mut(ib) -= t.grad_at(self);
  });
}

Var add_row(Var a, Var row) {
  same_tape(a, row, Op::add_row);
  const Matrix& av = a.value();
  const Matrix& rv = row.value();
  require(rv.rows() == 1 && rv.cols() == av.cols(), Op::add_row, "row vector must be 1x" + std::to_string(av.cols()));
  Matrix out = av.rowwise() + rv.row(0);
  return a.tape->record(Op::add_row, std::move(out), {a.id, row.id},
                        [ia = a.id, ir = row.id](Tape& t, std::size_t self) {
                          const Matrix& g = t.grad_at(self);
                          if (t.needs_grad(ia)) t.grad_mut(ia) += g;
                          if (t.needs_grad(ir)) t.grad_mut(ir) += g.colwise().sum();
                        });
}

Var mul_elem(Var a, Var b) {
  same_tape(a, b, Op::mul_elem);
  same_shape(a.value(), b.value(), Op::mul_elem);
  Matrix out = a.value().cwiseProduct(b.value());
  return a.tape->record(Op::mul_elem, std::move(out), {a.id, b.id}, [ia = a.id, ib = b.id](Tape& t, std::size_t self) {
    const Matrix& g = t.grad_at(self);
    if (t.needs_grad(ia)) t.grad_mut(ia) += g.cwiseProduct(t.value_at(ib));
    if (t.needs_grad(ib)) t.grad_mut(ib) += g.cwiseProduct(t.value_at(ia));
  });
}

Var mul_col(Var col, Var m) {
  same_tape(col, m, Op::mul_col);
  const Matrix& cv = col.value();
  const Matrix& mv = m.value();
  require(cv.cols() == 1 && cv.rows() == mv.rows(), Op::mul_col, "column must be " + std::to_string(mv.rows()) + "x1");
  Matrix out = cv.col(0).asDiagonal() * mv;
  return col.tape->record(Op::mul_col, std::move(out), {col.id, m.id},
                          [ic = col.id, im = m.id](Tape& t, std::size_t self) {
                            const Matrix& g = t.grad_at(self);
                            if (t.needs_grad(ic)) t.grad_mut(ic).col(0) += g.cwiseProduct(t.value_at(im)).rowwise().sum();
                            if (t.needs_grad(im)) t.grad_mut(im) += t.value_at(ic).col(0).asDiagonal() * g;
                          });
}

Var scale(Var a, double factor) {
  Matrix out = a.value() * factor;
  return a.tape->record(Op::scale, std::move(out), {a.id}, [ia = a.id, factor](Tape& t, std::size_t self) {
    t.grad_mut(ia) += factor * t.grad_at(self);
  });
}

Var one_minus(Var a) {
  Matrix out = (1.0 - a.value().array()).matrix();
  return a.tape->record(Op::one_minus, std::move(out), {a.id}, [ia = a.id](Tape& t, std::size_t self) {
    t.grad_mut(ia) -= t.grad_at(self);
  });
}

Var relu(Var a) {
  Matrix out = a.value().cwiseMax(0.0);
  return a.tape->record(Op::relu, std::move(out), {a.id}, [ia = a.id](Tape& t, std::size_t self) {
    const Matrix& x = t.value_at(ia);
    t.grad_mut(ia).array() += (x.array() > 0.0).select(t.grad_at(self).array(), 0.0);
  });
}

Var sigmoid(Var a) {
  Matrix out = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  return a.tape->record(Op::sigmoid, std::move(out), {a.id}, [ia = a.id](Tape& t, std::size_t self) {
    const auto s = t.value_at(self).array();
    t.grad_mut(ia).array() += t.grad_at(self).array() * s * (1.0 - s);
  });
}

Matrix row_softmax(const Matrix& a) {
  Matrix out(a.rows(), a.cols());
  for (Index r = 0; r < a.rows(); ++r) {
    const double mx = a.row(r).maxCoeff();
    out.row(r) = (a.row(r).array() - mx).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

Var row_softmax(Var a) {
  require(a.cols() > 0, Op::row_softmax, "needs at least one column");
  Matrix out = row_softmax(a.value());
  return a.tape->record(Op::row_softmax, std::move(out), {a.id}, [ia = a.id](Tape& t, std::size_t self) {
    const Matrix& p = t.value_at(self);
    const Matrix& g = t.grad_at(self);
    Matrix& ga = t.grad_mut(ia);
    for (Index r = 0; r < p.rows(); ++r) {
      const double dot = g.row(r).dot(p.row(r));
      ga.row(r).array() += p.row(r).array() * (g.row(r).array() - dot);
    }
  });
}

Var dropout(Var a, double rate, bool training, Rng& rng) {
  require(rate >= 0.0 && rate < 1.0, Op::dropout, "rate must lie in [0, 1)");
  if (!training || rate == 0.0) return a;
  const double keep_scale = 1.0 / (1.0 - rate);
  const Matrix& av = a.value();
  Matrix mask(av.rows(), av.cols());
  for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = rng.uniform() >= rate ? keep_scale : 0.0;
  Matrix out = av.cwiseProduct(mask);
  return a.tape->record(Op::dropout, std::move(out), {a.id},
                        [ia = a.id, mask = std::move(mask)](Tape& t, std::size_t self) {
                          t.grad_mut(ia) += t.grad_at(self).cwiseProduct(mask);
                        });
}

SparseMatrix dropout_sparse(const SparseMatrix& s, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout: rate must lie in [0, 1)");
  SparseMatrix out = s;
  if (rate == 0.0) return out;
  const double keep_scale = 1.0 / (1.0 - rate);
  double* values = out.valuePtr();
  for (Index k = 0; k < out.nonZeros(); ++k) values[k] *= rng.uniform() >= rate ? keep_scale : 0.0;
  return out;
}

Var gather_rows(Var a, std::span<const Index> rows) {
  const Matrix& av = a.value();
  check_rows(rows, av.rows(), Op::gather_rows);
  Matrix out(static_cast<Index>(rows.size()), av.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = av.row(rows[i]);
  std::vector<Index> idx(rows.begin(), rows.end());
  return a.tape->record(Op::gather_rows, std::move(out), {a.id},
                        [ia = a.id, idx = std::move(idx)](Tape& t, std::size_t self) {
                          const Matrix& g = t.grad_at(self);
                          Matrix& ga = t.grad_mut(ia);
                          for (std::size_t i = 0; i < idx.size(); ++i) ga.row(idx[i]) += g.row(static_cast<Index>(i));
                        });
}

Var scatter_rows(Var base, std::span<const Index> rows, Var src) {
  same_tape(base, src, Op::scatter_rows);
  const Matrix& bv = base.value();
  const Matrix& sv = src.value();
  require(sv.rows() == static_cast<Index>(rows.size()) && sv.cols() == bv.cols(), Op::scatter_rows,
          "source must be " + std::to_string(rows.size()) + "x" + std::to_string(bv.cols()));
  check_rows(rows, bv.rows(), Op::scatter_rows);
  Matrix out = bv;
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(rows[i]) = sv.row(static_cast<Index>(i));
  std::vector<Index> idx(rows.begin(), rows.end());
  return base.tape->record(Op::scatter_rows, std::move(out), {base.id, src.id},
                           [ib = base.id, is = src.id, idx = std::move(idx)](Tape& t, std::size_t self) {
                             const Matrix& g = t.grad_at(self);
                             if (t.needs_grad(ib)) {
                               Matrix masked = g;
                               for (Index r : idx) masked.row(r).setZero();
                               t.grad_mut(ib) += masked;
                             }
                             if (t.needs_grad(is)) {
                               Matrix& gs = t.grad_mut(is);
                               for (std::size_t i = 0; i < idx.size(); ++i) gs.row(static_cast<Index>(i)) += g.row(idx[i]);
                             }
                           });
}

Var l2_row_norm_sum(Var a, double eps) {
  const Matrix& av = a.value();
  double total = 0.0;
  for (Index r = 0; r < av.rows(); ++r) total += std::sqrt(av.row(r).squaredNorm());
  Matrix out(1, 1);
  out(0, 0) = total;
  return a.tape->record(Op::l2_row_norm_sum, std::move(out), {a.id}, [ia = a.id, eps](Tape& t, std::size_t self) {
    const double g = t.grad_at(self)(0, 0);
    const Matrix& x = t.value_at(ia);
    Matrix& ga = t.grad_mut(ia);
    for (Index r = 0; r < x.rows(); ++r) ga.row(r) += (g / std::sqrt(x.row(r).squaredNorm() + eps)) * x.row(r);
  });
}

Var cross_entropy_rows(Var logits, std::span<const Index> rows, std::span<const int> labels) {
  const Matrix& lv = logits.value();
  require(!rows.empty(), Op::cross_entropy_rows, "no rows selected");
  check_rows(rows, lv.rows(), Op::cross_entropy_rows);
  require(static_cast<Index>(labels.size()) >= lv.rows(), Op::cross_entropy_rows, "label vector too short");
  double total = 0.0;
  for (Index r : rows) {
    const int y = labels[r];
    require(y >= 0 && y < lv.cols(), Op::cross_entropy_rows, "label out of range");
    const double mx = lv.row(r).maxCoeff();
    const double lse = mx + std::log((lv.row(r).array() - mx).exp().sum());
    total += lse - lv(r, y);
  }
  Matrix out(1, 1);
  out(0, 0) = total / static_cast<double>(rows.size());
  std::vector<Index> idx(rows.begin(), rows.end());
  std::vector<int> targets;
  targets.reserve(idx.size());
  for (Index r : idx) targets.push_back(labels[r]);
  return logits.tape->record(
      Op::cross_entropy_rows, std::move(out), {logits.id},
      [il = logits.id, idx = std::move(idx), targets = std::move(targets)](Tape& t, std::size_t self) {
        const double g = t.grad_at(self)(0, 0) / static_cast<double>(idx.size());
        const Matrix& x = t.value_at(il);
        Matrix& gx = t.grad_mut(il);
        for (std::size_t i = 0; i < idx.size(); ++i) {
          const Index r = idx[i];
          const double mx = x.row(r).maxCoeff();
          Eigen::RowVectorXd p = (x.row(r).array() - mx).exp().matrix();
          p /= p.sum();
          p(targets[i]) -= 1.0;
          gx.row(r) += g * p;
        }
      });
}

Var sum(Var a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape->record(Op::sum, std::move(out), {a.id}, [ia = a.id](Tape& t, std::size_t self) {
    t.grad_mut(ia).array() += t.grad_at(self)(0, 0);
  });
}

Var neighborhood_softmax_aggregate(const Graph& g, Var scores, Var values) {
  same_tape(scores, values, Op::neighborhood_softmax_aggregate);
  const Matrix& c = scores.value();
  const Matrix& f = values.value();
  const Op op = Op::neighborhood_softmax_aggregate;
  require(c.rows() == g.num_nodes && c.cols() == 1, op, "scores must be num_nodes x 1");
  require(f.rows() == g.num_nodes, op, "values must have num_nodes rows");

  // Normalized weights are stored per target in CSR order with the self
  // weight first, then neighbors.
  const Graph* graph = &g;
  std::vector<double> weights(static_cast<std::size_t>(g.num_nodes + g.neighbors.size()));
  Matrix out = Matrix::Zero(f.rows(), f.cols());
  for (Index v = 0; v < g.num_nodes; ++v) {
    const auto nbrs = g.neighbors_of(v);
    double* w = weights.data() + g.offsets[v] + v;
    double mx = c(v, 0);
    for (Index u : nbrs) mx = std::max(mx, c(u, 0));
    w[0] = std::exp(c(v, 0) - mx);
    double z = w[0];
    for (std::size_t i = 0; i < nbrs.size(); ++i) {
      w[i + 1] = std::exp(c(nbrs[i], 0) - mx);
      z += w[i + 1];
    }
    for (std::size_t i = 0; i <= nbrs.size(); ++i) w[i] /= z;
    out.row(v) = w[0] * f.row(v);
    for (std::size_t i = 0; i < nbrs.size(); ++i) out.row(v) += w[i + 1] * f.row(nbrs[i]);
  }
  return scores.tape->record(
      op, std::move(out), {scores.id, values.id},
      [graph, ic = scores.id, iv = values.id, weights = std::move(weights)](Tape& t, std::size_t self) {
        const Matrix& gout = t.grad_at(self);
        const Matrix& f = t.value_at(iv);
        const Matrix& o = t.value_at(self);
        const bool want_c = t.needs_grad(ic);
        const bool want_f = t.needs_grad(iv);
        for (Index v = 0; v < graph->num_nodes; ++v) {
          const auto nbrs = graph->neighbors_of(v);
          const double* w = weights.data() + graph->offsets[v] + v;
          // d out(v) / d c(u) = w_uv (f(u) - out(v))
          auto visit = [&](Index u, double wu) {
            if (want_f) t.grad_mut(iv).row(u) += wu * gout.row(v);
            if (want_c) t.grad_mut(ic)(u, 0) += wu * gout.row(v).dot(f.row(u) - o.row(v));
          };
          visit(v, w[0]);
          for (std::size_t i = 0; i < nbrs.size(); ++i) visit(nbrs[i], w[i + 1]);
        }
      });
}

}  // namespace cpf::ad
