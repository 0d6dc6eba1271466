#include "cpf/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace cpf::ad {

void Adam::step(std::span<Matrix* const> params, std::span<const Matrix> grads) {
  if (params.size() != grads.size()) throw std::invalid_argument("adam: params and grads differ in count");
  if (m_.empty()) {
    for (const Matrix* p : params) {
      m_.push_back(Matrix::Zero(p->rows(), p->cols()));
      v_.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  }
  if (m_.size() != params.size()) throw std::invalid_argument("adam: parameter list changed between steps");

  ++t_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& p = *params[i];
    const Matrix& g = grads[i];
    if (g.rows() != p.rows() || g.cols() != p.cols() || m_[i].rows() != p.rows() || m_[i].cols() != p.cols()) {
      throw std::invalid_argument("adam: shape mismatch for parameter " + std::to_string(i));
    }
    m_[i] = b1 * m_[i] + (1.0 - b1) * g;
    v_[i] = b2 * v_[i] + (1.0 - b2) * g.cwiseAbs2();
    if (config_.weight_decay != 0.0) p *= 1.0 - config_.lr * config_.weight_decay;
    p.array() -= config_.lr * (m_[i].array() / correction1) /
                 ((v_[i].array() / correction2).sqrt() + config_.eps);
  }
}

}  // namespace cpf::ad
