#include "otmeta/params.hpp"

#include <stdexcept>

namespace otmeta {

void ParameterVector::add_block(std::string name, Eigen::MatrixXd value) {
  for (const auto& b : blocks_)
    if (b.name == name) throw std::invalid_argument("duplicate parameter block '" + name + "'");
  blocks_.push_back({std::move(name), std::move(value)});
}

std::size_t ParameterVector::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < blocks_.size(); ++i)
    if (blocks_[i].name == name) return i;
  throw std::out_of_range("no parameter block named '" + name + "'");
}

const Eigen::MatrixXd& ParameterVector::operator[](const std::string& name) const { return blocks_[index_of(name)].value; }
Eigen::MatrixXd& ParameterVector::operator[](const std::string& name) { return blocks_[index_of(name)].value; }

std::size_t ParameterVector::dimension() const {
  std::size_t n = 0;
  for (const auto& b : blocks_) n += static_cast<std::size_t>(b.value.size());
  return n;
}

bool ParameterVector::same_layout(const ParameterVector& other) const {
  if (blocks_.size() != other.blocks_.size()) return false;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const auto& a = blocks_[i];
    const auto& b = other.blocks_[i];
    if (a.name != b.name || a.value.rows() != b.value.rows() || a.value.cols() != b.value.cols()) return false;
  }
  return true;
}

void ParameterVector::require_layout(const ParameterVector& o, const char* op) const {
  if (!same_layout(o)) throw std::invalid_argument(std::string("parameter layouts differ in ") + op);
}

Eigen::VectorXd ParameterVector::flatten() const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(dimension()));
  Eigen::Index off = 0;
  for (const auto& b : blocks_) {
    flat.segment(off, b.value.size()) = b.value.reshaped();
    off += b.value.size();
  }
  return flat;
}

ParameterVector ParameterVector::unflatten(const Eigen::VectorXd& flat) const {
  if (static_cast<std::size_t>(flat.size()) != dimension())
    throw std::invalid_argument("flat vector of size " + std::to_string(flat.size()) + " does not match dimension " +
                                std::to_string(dimension()));
  ParameterVector out = *this;
  Eigen::Index off = 0;
  for (auto& b : out.blocks_) {
    b.value.reshaped() = flat.segment(off, b.value.size());
    off += b.value.size();
  }
  return out;
}

ParameterVector ParameterVector::zeros_like() const {
  ParameterVector out = *this;
  for (auto& b : out.blocks_) b.value.setZero();
  return out;
}

ParameterVector& ParameterVector::operator+=(const ParameterVector& o) {
  require_layout(o, "+=");
  for (std::size_t i = 0; i < blocks_.size(); ++i) blocks_[i].value += o.blocks_[i].value;
  return *this;
}

ParameterVector& ParameterVector::operator-=(const ParameterVector& o) {
  require_layout(o, "-=");
  for (std::size_t i = 0; i < blocks_.size(); ++i) blocks_[i].value -= o.blocks_[i].value;
  return *this;
}

ParameterVector& ParameterVector::operator*=(double s) {
  for (auto& b : blocks_) b.value *= s;
  return *this;
}

ParameterVector& ParameterVector::axpy(double s, const ParameterVector& o) {
  require_layout(o, "axpy");
  for (std::size_t i = 0; i < blocks_.size(); ++i) blocks_[i].value += s * o.blocks_[i].value;
  return *this;
}

double ParameterVector::dot(const ParameterVector& o) const {
  require_layout(o, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < blocks_.size(); ++i) s += blocks_[i].value.cwiseProduct(o.blocks_[i].value).sum();
  return s;
}

double ParameterVector::max_abs() const {
  double m = 0.0;
  for (const auto& b : blocks_)
    if (b.value.size()) m = std::max(m, b.value.cwiseAbs().maxCoeff());
  return m;
}

}  // namespace otmeta
