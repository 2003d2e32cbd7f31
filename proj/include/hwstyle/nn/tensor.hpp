#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hwstyle::nn {

// Row-major so that a batch of vectors is a stack of rows and the flat
// storage order matches the checkpoint layout.
using Tensor2 = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Parameter {
  std::string name;
  Tensor2 value;
};

using ParamId = std::size_t;

/// Ordered, named parameter list. Order is declaration order and is the
/// order parameters are written to checkpoints.
class ParameterStore {
 public:
  ParamId add(std::string name, Tensor2 init);

  std::size_t size() const { return params_.size(); }
  Parameter& operator[](ParamId id) { return params_[id]; }
  const Parameter& operator[](ParamId id) const { return params_[id]; }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  /// Throws InvalidArgument if absent.
  ParamId find(const std::string& name) const;
  std::size_t scalar_count() const;
  bool all_finite() const;
  /// Copies values from `other`; names and shapes must match.
  void assign_values(const ParameterStore& other);

 private:
  std::vector<Parameter> params_;
};

/// One tensor per parameter, parallel to a ParameterStore.
using Gradients = std::vector<Tensor2>;

Gradients zeros_like(const ParameterStore& store);

}  // namespace hwstyle::nn
