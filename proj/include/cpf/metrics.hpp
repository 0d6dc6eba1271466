#pragma once

#include <span>
#include <vector>

#include "cpf/graph.hpp"

namespace cpf {

/// Index of the largest entry per row; ties go to the lowest class index.
std::vector<int> argmax_rows(const Matrix& scores);

/// Fraction of `nodes` whose argmax row equals the true label.
/// Throws std::invalid_argument when `nodes` is empty.
double accuracy(const Matrix& scores, const Graph& g, std::span<const Index> nodes);

/// student / teacher - 1.
double relative_improvement(double student_acc, double teacher_acc);

}  // namespace cpf
