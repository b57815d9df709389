#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "osda/matrix.hpp"
#include "osda/nn/params.hpp"
#include "osda/rng.hpp"

namespace osda::nn {

// Boolean attention grid. allowed(q, k) == false means key k contributes
// exactly zero weight for query q.
struct AttentionMask {
  int query_len = 0;
  int key_len = 0;
  std::vector<uint8_t> allowed;

  AttentionMask() = default;
  AttentionMask(int q, int k, bool value = true)
      : query_len(q), key_len(k), allowed(static_cast<size_t>(q) * k, value ? 1 : 0) {}

  bool at(int q, int k) const { return allowed[static_cast<size_t>(q) * key_len + k] != 0; }
  void set(int q, int k, bool v) { allowed[static_cast<size_t>(q) * key_len + k] = v ? 1 : 0; }

  static AttentionMask full(int q, int k) { return AttentionMask(q, k, true); }
  static AttentionMask causal(int n) {
    AttentionMask m(n, n, false);
    for (int q = 0; q < n; ++q)
      for (int k = 0; k <= q; ++k) m.set(q, k, true);
    return m;
  }
};

// Reverse-mode tape over Matrix-valued operations. One tape per forward pass;
// nodes are appended in topological order so backward() is a reverse sweep.
// Parameter leaves reference a ParamStore; their gradients are accumulated
// into a caller-owned buffer so concurrent tapes can share one frozen store.
class Tape {
 public:
  explicit Tape(const ParamStore* params = nullptr) : params_(params) {}

  int input(Matrix v);              // leaf, gradient discarded
  int param(int param_index);       // leaf bound to params->value(param_index)
  int param(const std::string& name);

  int matmul(int a, int b);
  int matmul_nt(int a, int b);      // a * b^T
  int add(int a, int b);
  int add_row_broadcast(int a, int row);  // row: 1 x cols
  int scale(int a, double s);
  int concat_rows(const std::vector<int>& parts);
  int slice_rows(int a, int start, int len);
  int slice_cols(int a, int start, int len);
  int concat_cols(const std::vector<int>& parts);
  // Row-wise softmax; disallowed entries get -1e30 added to their logit
  // before the max-subtracted exp, which underflows to an exact 0 weight.
  int softmax_rows_masked(int logits, const AttentionMask& mask);
  int layer_norm(int x, int gain, int bias, double eps = 1e-5);
  int gelu(int x);
  int dropout(int x, double rate, RandomStream& rng, bool train);
  // Mean cross-entropy from 2-class logits over valid rows; returns 1x1.
  int mean_ce_logits(int logits, const std::vector<int>& labels, const std::vector<uint8_t>& valid);
  int add_scaled(int a, int b, double wa, double wb);  // wa*a + wb*b, same shape

  const Matrix& value(int id) const { return nodes_[id].value; }
  const Matrix& grad(int id) const { return nodes_[id].grad; }
  int node_count() const { return static_cast<int>(nodes_.size()); }
  const ParamStore* store() const { return params_; }

  // Seeds d(root)=1 and sweeps the tape in reverse. root must be 1x1.
  // Parameter-leaf gradients are added into param_grads (indexed like the
  // store) when it is non-null, else into the store's own grad buffers.
  void backward(int root, std::vector<Matrix>* param_grads = nullptr);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void(Tape&)> back;  // accumulates into parent grads
    int param_index = -1;
  };

  int push(Matrix value, std::function<void(Tape&)> back = nullptr);
  Matrix& grad_mut(int id) { return nodes_[id].grad; }

  const ParamStore* params_;
  std::vector<Node> nodes_;
};

// out = a * b, shapes (r x k) * (k x c). Plain helper also used outside tapes.
Matrix matmul_values(const Matrix& a, const Matrix& b);

}  // namespace osda::nn
