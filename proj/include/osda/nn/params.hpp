#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "osda/matrix.hpp"
#include "osda/rng.hpp"

namespace osda::nn {

// Named parameter tensors with per-parameter gradient buffers.
// Iteration order is insertion order and is part of the checkpoint format.
class ParamStore {
 public:
  int add(const std::string& name, Matrix value);
  // Uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
  int add_uniform(const std::string& name, int rows, int cols, int fan_in, RandomStream& rng);

  int find(const std::string& name) const;  // -1 if absent
  bool has(const std::string& name) const { return find(name) >= 0; }
  int index_of(const std::string& name) const;  // throws if absent

  int count() const { return static_cast<int>(values_.size()); }
  const std::string& name(int i) const { return names_[i]; }
  Matrix& value(int i) { return values_[i]; }
  const Matrix& value(int i) const { return values_[i]; }
  Matrix& grad(int i) { return grads_[i]; }
  const Matrix& grad(int i) const { return grads_[i]; }
  Matrix& value(const std::string& name) { return values_[index_of(name)]; }
  const Matrix& value(const std::string& name) const { return values_[index_of(name)]; }

  void zero_grads();
  size_t scalar_count() const;  // total number of trainable scalars

  // Gradient accumulator shaped like this store.
  std::vector<Matrix> make_grad_buffer() const;

 private:
  std::vector<std::string> names_;
  std::vector<Matrix> values_;
  std::vector<Matrix> grads_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace osda::nn
