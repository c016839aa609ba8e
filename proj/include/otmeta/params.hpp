#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace otmeta {

/// Ordered, named blocks of 64-bit weights. Value type: copies are
/// independent snapshots.
class ParameterVector {
 public:
  struct Block {
    std::string name;
    Eigen::MatrixXd value;

    friend bool operator==(const Block& a, const Block& b) {
      return a.name == b.name && a.value.rows() == b.value.rows() && a.value.cols() == b.value.cols() &&
             a.value == b.value;
    }
  };

  ParameterVector() = default;

  /// Appends a block; names must be unique.
  void add_block(std::string name, Eigen::MatrixXd value);

  std::size_t num_blocks() const { return blocks_.size(); }
  const std::vector<Block>& blocks() const { return blocks_; }
  Block& block(std::size_t i) { return blocks_.at(i); }
  const Block& block(std::size_t i) const { return blocks_.at(i); }
  const Eigen::MatrixXd& operator[](const std::string& name) const;
  Eigen::MatrixXd& operator[](const std::string& name);
  std::size_t index_of(const std::string& name) const;

  /// Total number of scalars.
  std::size_t dimension() const;
  bool same_layout(const ParameterVector& other) const;

  Eigen::VectorXd flatten() const;
  /// Inverse of flatten over this vector's layout.
  ParameterVector unflatten(const Eigen::VectorXd& flat) const;
  /// Same layout, all zeros.
  ParameterVector zeros_like() const;

  ParameterVector& operator+=(const ParameterVector& o);
  ParameterVector& operator-=(const ParameterVector& o);
  ParameterVector& operator*=(double s);
  /// this += s * o
  ParameterVector& axpy(double s, const ParameterVector& o);

  double dot(const ParameterVector& o) const;
  double squared_norm() const { return dot(*this); }
  double max_abs() const;

  friend ParameterVector operator+(ParameterVector a, const ParameterVector& b) { return a += b; }
  friend ParameterVector operator-(ParameterVector a, const ParameterVector& b) { return a -= b; }
  friend ParameterVector operator*(double s, ParameterVector a) { return a *= s; }
  friend bool operator==(const ParameterVector& a, const ParameterVector& b) { return a.blocks_ == b.blocks_; }

 private:
  void require_layout(const ParameterVector& o, const char* op) const;

  std::vector<Block> blocks_;
};

}  // namespace otmeta
