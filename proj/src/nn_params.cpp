#include "osda/nn/params.hpp"

#include <cmath>
#include <stdexcept>

namespace osda::nn {

int ParamStore::add(const std::string& name, Matrix value) {
  if (index_.count(name)) throw std::invalid_argument("ParamStore: duplicate parameter '" + name + "'");
  int idx = static_cast<int>(values_.size());
  index_[name] = idx;
  names_.push_back(name);
  grads_.emplace_back(value.rows, value.cols);
  values_.push_back(std::move(value));
  return idx;
}

int ParamStore::add_uniform(const std::string& name, int rows, int cols, int fan_in, RandomStream& rng) {
  Matrix m(rows, cols);
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (auto& v : m.data) v = rng.uniform(-bound, bound);
  return add(name, std::move(m));
}

int ParamStore::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? -1 : it->second;
}

int ParamStore::index_of(const std::string& name) const {
  int i = find(name);
  if (i < 0) throw std::out_of_range("ParamStore: unknown parameter '" + name + "'");
  return i;
}

void ParamStore::zero_grads() {
  for (auto& g : grads_)
    for (auto& v : g.data) v = 0.0;
}

size_t ParamStore::scalar_count() const {
  size_t n = 0;
  for (const auto& v : values_) n += v.size();
  return n;
}

std::vector<Matrix> ParamStore::make_grad_buffer() const {
  std::vector<Matrix> out;
  out.reserve(values_.size());
  for (const auto& v : values_) out.emplace_back(v.rows, v.cols);
  return out;
}

}  // namespace osda::nn
