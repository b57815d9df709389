#include "osda/nn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

namespace osda::nn {

namespace {
constexpr double kMaskPenalty = -1e30;
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
}  // namespace

Matrix matmul_values(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw std::invalid_argument("matmul: inner dimensions disagree");
  Matrix out(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    const double* arow = a.row_ptr(i);
    double* orow = out.row_ptr(i);
    for (int k = 0; k < a.cols; ++k) {
      const double av = arow[k];
      if (av == 0.0) continue;
      const double* brow = b.row_ptr(k);
      for (int j = 0; j < b.cols; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

int Tape::push(Matrix value, std::function<void(Tape&)> back) {
  Node n;
  n.value = std::move(value);
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::input(Matrix v) { return push(std::move(v)); }

int Tape::param(int param_index) {
  if (!params_) throw std::logic_error("Tape::param: no ParamStore bound");
  int id = push(params_->value(param_index));
  nodes_[id].param_index = param_index;
  return id;
}

int Tape::param(const std::string& name) { return param(params_->index_of(name)); }

int Tape::matmul(int a, int b) {
  Matrix out = matmul_values(nodes_[a].value, nodes_[b].value);
  int id = push(std::move(out));
  int self = id;
  nodes_[self].back = [a, b, self](Tape& t) {
    const Matrix& g = t.nodes_[self].grad;
    const Matrix& av = t.nodes_[a].value;
    const Matrix& bv = t.nodes_[b].value;
    Matrix& ga = t.grad_mut(a);
    Matrix& gb = t.grad_mut(b);
    // dA += g * B^T
    for (int i = 0; i < av.rows; ++i) {
      const double* grow = g.row_ptr(i);
      double* garow = ga.row_ptr(i);
      for (int k = 0; k < av.cols; ++k) {
        const double* brow = bv.row_ptr(k);
        double acc = 0.0;
        for (int j = 0; j < bv.cols; ++j) acc += grow[j] * brow[j];
        garow[k] += acc;
      }
    }
    // dB += A^T * g
    for (int i = 0; i < av.rows; ++i) {
      const double* arow = av.row_ptr(i);
      const double* grow = g.row_ptr(i);
      for (int k = 0; k < av.cols; ++k) {
        const double av_ik = arow[k];
        if (av_ik == 0.0) continue;
        double* gbrow = gb.row_ptr(k);
        for (int j = 0; j < bv.cols; ++j) gbrow[j] += av_ik * grow[j];
      }
    }
  };
  return id;
}

int Tape::matmul_nt(int a, int b) {
  const Matrix& av = nodes_[a].value;
  const Matrix& bv = nodes_[b].value;
  if (av.cols != bv.cols) throw std::invalid_argument("matmul_nt: column counts disagree");
  Matrix out(av.rows, bv.rows);
  for (int i = 0; i < av.rows; ++i) {
    const double* arow = av.row_ptr(i);
    double* orow = out.row_ptr(i);
    for (int j = 0; j < bv.rows; ++j) {
      const double* brow = bv.row_ptr(j);
      double acc = 0.0;
      for (int k = 0; k < av.cols; ++k) acc += arow[k] * brow[k];
      orow[j] = acc;
    }
  }
  int id = push(std::move(out));
  int self = id;
  nodes_[self].back = [a, b, self](Tape& t) {
    const Matrix& g = t.nodes_[self].grad;
    const Matrix& av2 = t.nodes_[a].value;
    const Matrix& bv2 = t.nodes_[b].value;
    Matrix& ga = t.grad_mut(a);
    Matrix& gb = t.grad_mut(b);
    // C = A B^T: dA += g * B ; dB += g^T * A
    for (int i = 0; i < av2.rows; ++i) {
      const double* grow = g.row_ptr(i);
      double* garow = ga.row_ptr(i);
      for (int j = 0; j < bv2.rows; ++j) {
        const double gij = grow[j];
        if (gij == 0.0) continue;
        const double* brow = bv2.row_ptr(j);
        for (int k = 0; k < bv2.cols; ++k) garow[k] += gij * brow[k];
      }
    }
    for (int i = 0; i < av2.rows; ++i) {
      const double* grow = g.row_ptr(i);
      const double* arow = av2.row_ptr(i);
      for (int j = 0; j < bv2.rows; ++j) {
        const double gij = grow[j];
        if (gij == 0.0) continue;
        double* gbrow = gb.row_ptr(j);
        for (int k = 0; k < av2.cols; ++k) gbrow[k] += gij * arow[k];
      }
    }
  };
  return id;
}

int Tape::add(int a, int b) {
  const Matrix& av = nodes_[a].value;
  const Matrix& bv = nodes_[b].value;
  if (!av.same_shape(bv)) throw std::invalid_argument("add: shape mismatch");
  Matrix out = av;
  for (size_t i = 0; i < out.size(); ++i) out.data[i] += bv.data[i];
  int id = push(std::move(out));
  int self = id;
  nodes_[self].back = [a, b, self](Tape& t) {
    const Matrix& g = t.nodes_[self].grad;
    Matrix& ga = t.grad_mut(a);
    Matrix& gb = t.grad_mut(b);
    for (size_t i = 0; i < g.size(); ++i) {
      ga.data[i] += g.data[i];
      gb.data[i] += g.data[i];
    }
  };
  return id;
}

int Tape::add_row_broadcast(int a, int row) {
  const Matrix& av = nodes_[a].value;
  const Matrix& rv = nodes_[row].value;
  if (rv.rows != 1 || rv.cols != av.cols) throw std::invalid_argument("add_row_broadcast: bias must be 1 x cols");
  Matrix out = av;
  for (int i = 0; i < out.rows; ++i) {
    double* orow = out.row_ptr(i);
    for (int j = 0; j < out.cols; ++j) orow[j] += rv.data[j];
  }
  int id = push(std::move(out));
  int self = id;
  nodes_[self].back = [a, row, self](Tape& t) {
    const Matrix& g = t.nodes_[self].grad;
    Matrix& ga = t.grad_mut(a);
    Matrix& gr = t.grad_mut(row);
    for (size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i];
    for (int i = 0; i < g.rows; ++i) {
      const double* grow = g.row_ptr(i);
      for (int j = 0; j < g.cols; ++j) gr.data[j] += grow[j];
    }
  };
  return id;
}

int Tape::scale(int a, double s) {
  Matrix out = nodes_[a].value;
  for (auto& v : out.data) v *= s;
  int id = push(std::move(out));
  int self = id;
  nodes_[self].back = [a, s, self](Tape& t) {
    const Matrix& g = t.nodes_[self].grad;
    Matrix& ga = t.grad_mut(a);
    for (size_t i = 0; i < g.size(); ++i) ga.data[i] += s * g.data[i];
  };
  return id;
}

int Tape::concat_rows(const std::vector<int>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: empty");
  int cols = nodes_[parts[0]].value.cols;
  int rows = 0;
  for (int p : parts) {
    if (nodes_[p].value.cols != cols) throw std::invalid_argument("concat_rows: column mismatch");
    rows += nodes_[p].value.rows;
  }
  Matrix out(rows, cols);
  int r = 0;
  for (int p : parts) {
    const Matrix& pv = nodes_[p].value;
    std::copy(pv.data.begin(), pv.data.end(), out.row_ptr(r));
    r += pv.rows;
  }
  int id = push(std::move(out));
  int self = id;
  std::vector<int> ps = parts;
  nodes_[self].back = [ps, self](Tape& t) {
    const Matrix& g = t.nodes_[self].grad;
    int r2 = 0;
    for (int p : ps) {
      Matrix& gp = t.grad_mut(p);
      const int n = gp.rows * gp.cols;
      const double* src = g.row_ptr(r2);
      for (int i = 0; i < n; ++i) gp.data[i] += src[i];
      r2 += gp.rows;
    }
  };
  return id;
}

int Tape::slice_rows(int a, int start, int len) {
  const Matrix& av = nodes_[a].value;
  if (start < 0 || len < 0 || start + len > av.rows) throw std::invalid_argument("slice_rows: out of range");
  Matrix out(len, av.cols);
  std::copy(av.row_ptr(start), av.row_ptr(start) + static_cast<size_t>(len) * av.cols, out.data.begin());
  int id = push(std::move(out));
  int self = id;
  nodes_[self].back = [a, start, len, self](Tape& t) {
    const Matrix& g = t.nodes_[self].grad;
    Matrix& ga = t.grad_mut(a);
    double* dst = ga.row_ptr(start);
    for (size_t i = 0; i < static_cast<size_t>(len) * g.cols; ++i) dst[i] += g.data[i];
  };
  return id;
}

int Tape::slice_cols(int a, int start, int len) {
  const Matrix& av = nodes_[a].value;
  if (start < 0 || len < 0 || start + len > av.cols) throw std::invalid_argument("slice_cols: out of range");
  Matrix out(av.rows, len);
  for (int i = 0; i < av.rows; ++i) {
    const double* src = av.row_ptr(i) + start;
    std::copy(src, src + len, out.row_ptr(i));
  }
  int id = push(std::move(out));
  int self = id;
  nodes_[self].back = [a, start, len, self](Tape& t) {
    const Matrix& g = t.nodes_[self].grad;
    Matrix& ga = t.grad_mut(a);
    for (int i = 0; i < g.rows; ++i) {
      const double* grow = g.row_ptr(i);
      double* garow = ga.row_ptr(i) + start;
      for (int j = 0; j < len; ++j) garow[j] += grow[j];
    }
  };
  return id;
}

int Tape::concat_cols(const std::vector<int>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: empty");
  int rows = nodes_[parts[0]].value.rows;
  int cols = 0;
  for (int p : parts) {
    if (nodes_[p].value.rows != rows) throw std::invalid_argument("concat_cols: row mismatch");
    cols += nodes_[p].value.cols;
  }
  Matrix out(rows, cols);
  int c = 0;
  for (int p : parts) {
    const Matrix& pv = nodes_[p].value;
    for (int i = 0; i < rows; ++i) std::copy(pv.row_ptr(i), pv.row_ptr(i) + pv.cols, out.row_ptr(i) + c);
    c += pv.cols;
  }
  int id = push(std::move(out));
  int self = id;
  std::vector<int> ps = parts;
  nodes_[self].back = [ps, self](Tape& t) {
    const Matrix& g = t.nodes_[self].grad;
    int c2 = 0;
    for (int p : ps) {
      Matrix& gp = t.grad_mut(p);
      for (int i = 0; i < g.rows; ++i) {
        const double* grow = g.row_ptr(i) + c2;
        double* gprow = gp.row_ptr(i);
        for (int j = 0; j < gp.cols; ++j) gprow[j] += grow[j];
      }
      c2 += gp.cols;
    }
  };
  return id;
}

int Tape::softmax_rows_masked(int logits, const AttentionMask& mask) {
  const Matrix& lv = nodes_[logits].value;
  if (lv.rows != mask.query_len || lv.cols != mask.key_len)
    throw std::invalid_argument("softmax_rows_masked: mask shape mismatch");
  Matrix out(lv.rows, lv.cols);
  for (int q = 0; q < lv.rows; ++q) {
    const double* in = lv.row_ptr(q);
    double* o = out.row_ptr(q);
    double mx = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (int k = 0; k < lv.cols; ++k) {
      double z = in[k] + (mask.at(q, k) ? 0.0 : kMaskPenalty);
      if (mask.at(q, k)) any = true;
      o[k] = z;
      if (z > mx) mx = z;
    }
    if (!any) throw std::domain_error("empty attention row");
    double sum = 0.0;
    for (int k = 0; k < lv.cols; ++k) {
      double e = std::exp(o[k] - mx);  // masked entries underflow to exact 0
      o[k] = e;
      sum += e;
    }
    for (int k = 0; k < lv.cols; ++k) o[k] /= sum;
  }
  int id = push(std::move(out));
  int self = id;
  nodes_[self].back = [logits, self](Tape& t) {
    const Matrix& g = t.nodes_[self].grad;
    const Matrix& p = t.nodes_[self].value;
    Matrix& gl = t.grad_mut(logits);
    for (int q = 0; q < p.rows; ++q) {
      const double* prow = p.row_ptr(q);
      const double* grow = g.row_ptr(q);
      double dot = 0.0;
      for (int k = 0; k < p.cols; ++k) dot += prow[k] * grow[k];
      double* glrow = gl.row_ptr(q);
      for (int k = 0; k < p.cols; ++k) glrow[k] += prow[k] * (grow[k] - dot);
    }
  };
  return id;
}

int Tape::layer_norm(int x, int gain, int bias, double eps) {
  const Matrix& xv = nodes_[x].value;
  const Matrix& gv = nodes_[gain].value;
  const Matrix& bv = nodes_[bias].value;
  if (gv.rows != 1 || gv.cols != xv.cols || bv.rows != 1 || bv.cols != xv.cols)
    throw std::invalid_argument("layer_norm: gain/bias must be 1 x cols");
  Matrix out(xv.rows, xv.cols);
  const int c = xv.cols;
  for (int i = 0; i < xv.rows; ++i) {
    const double* row = xv.row_ptr(i);
    double mu = 0.0;
    for (int j = 0; j < c; ++j) mu += row[j];
    mu /= c;
    double var = 0.0;
    for (int j = 0; j < c; ++j) {
      double d = row[j] - mu;
      var += d * d;
    }
    var /= c;
    double inv = 1.0 / std::sqrt(var + eps);
    double* orow = out.row_ptr(i);
    for (int j = 0; j < c; ++j) orow[j] = (row[j] - mu) * inv * gv.data[j] + bv.data[j];
  }
  int id = push(std::move(out));
  int self = id;
  nodes_[self].back = [x, gain, bias, eps, self](Tape& t) {
    const Matrix& g = t.nodes_[self].grad;
    const Matrix& xv2 = t.nodes_[x].value;
    const Matrix& gv2 = t.nodes_[gain].value;
    Matrix& gx = t.grad_mut(x);
    Matrix& gg = t.grad_mut(gain);
    Matrix& gb = t.grad_mut(bias);
    const int c2 = xv2.cols;
    for (int i = 0; i < xv2.rows; ++i) {
      const double* row = xv2.row_ptr(i);
      const double* grow = g.row_ptr(i);
      double mu = 0.0;
      for (int j = 0; j < c2; ++j) mu += row[j];
      mu /= c2;
      double var = 0.0;
      for (int j = 0; j < c2; ++j) {
        double d = row[j] - mu;
        var += d * d;
      }
      var /= c2;
      double inv = 1.0 / std::sqrt(var + eps);
      // dxhat, then fold the mu/var paths
      double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
      for (int j = 0; j < c2; ++j) {
        double xhat = (row[j] - mu) * inv;
        double dxhat = grow[j] * gv2.data[j];
        sum_dxhat += dxhat;
        sum_dxhat_xhat += dxhat * xhat;
        gg.data[j] += grow[j] * xhat;
        gb.data[j] += grow[j];
      }
      double* gxrow = gx.row_ptr(i);
      for (int j = 0; j < c2; ++j) {
        double xhat = (row[j] - mu) * inv;
        double dxhat = grow[j] * gv2.data[j];
        gxrow[j] += inv * (dxhat - sum_dxhat / c2 - xhat * sum_dxhat_xhat / c2);
      }
    }
  };
  return id;
}

int Tape::gelu(int x) {
  const Matrix& xv = nodes_[x].value;
  Matrix out(xv.rows, xv.cols);
  for (size_t i = 0; i < xv.size(); ++i) {
    double v = xv.data[i];
    out.data[i] = 0.5 * v * (1.0 + std::erf(v * kInvSqrt2));
  }
  int id = push(std::move(out));
  int self = id;
  nodes_[self].back = [x, self](Tape& t) {
    const Matrix& g = t.nodes_[self].grad;
    const Matrix& xv2 = t.nodes_[x].value;
    Matrix& gx = t.grad_mut(x);
    for (size_t i = 0; i < xv2.size(); ++i) {
      double v = xv2.data[i];
      double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
      double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
      gx.data[i] += g.data[i] * (cdf + v * pdf);
    }
  };
  return id;
}

int Tape::dropout(int x, double rate, RandomStream& rng, bool train) {
  if (!train || rate <= 0.0) return x;
  const Matrix& xv = nodes_[x].value;
  const double keep_scale = 1.0 / (1.0 - rate);
  auto mask = std::make_shared<std::vector<double>>(xv.size());
  Matrix out(xv.rows, xv.cols);
  for (size_t i = 0; i < xv.size(); ++i) {
    double m = (rng.u01() >= rate) ? keep_scale : 0.0;
    (*mask)[i] = m;
    out.data[i] = xv.data[i] * m;
  }
  int id = push(std::move(out));
  int self = id;
  nodes_[self].back = [x, mask, self](Tape& t) {
    const Matrix& g = t.nodes_[self].grad;
    Matrix& gx = t.grad_mut(x);
    for (size_t i = 0; i < g.size(); ++i) gx.data[i] += g.data[i] * (*mask)[i];
  };
  return id;
}

int Tape::mean_ce_logits(int logits, const std::vector<int>& labels, const std::vector<uint8_t>& valid) {
  const Matrix& lv = nodes_[logits].value;
  if (lv.cols != 2) throw std::invalid_argument("mean_ce_logits: logits must have 2 columns");
  if (static_cast<int>(labels.size()) != lv.rows || static_cast<int>(valid.size()) != lv.rows)
    throw std::invalid_argument("mean_ce_logits: label/valid length mismatch");
  int n = 0;
  for (uint8_t v : valid) n += v ? 1 : 0;
  if (n == 0) throw std::domain_error("mean_ce_logits: no valid positions");
  double total = 0.0;
  for (int i = 0; i < lv.rows; ++i) {
    if (!valid[i]) continue;
    const double* row = lv.row_ptr(i);
    double mx = std::max(row[0], row[1]);
    double lse = mx + std::log(std::exp(row[0] - mx) + std::exp(row[1] - mx));
    total += lse - row[labels[i]];
  }
  Matrix out(1, 1);
  out.data[0] = total / n;
  int id = push(std::move(out));
  int self = id;
  auto lab = std::make_shared<std::vector<int>>(labels);
  auto val = std::make_shared<std::vector<uint8_t>>(valid);
  nodes_[self].back = [logits, lab, val, n, self](Tape& t) {
    const double gs = t.nodes_[self].grad.data[0];
    const Matrix& lv2 = t.nodes_[logits].value;
    Matrix& gl = t.grad_mut(logits);
    for (int i = 0; i < lv2.rows; ++i) {
      if (!(*val)[i]) continue;
      const double* row = lv2.row_ptr(i);
      double mx = std::max(row[0], row[1]);
      double e0 = std::exp(row[0] - mx), e1 = std::exp(row[1] - mx);
      double z = e0 + e1;
      double p0 = e0 / z, p1 = e1 / z;
      double* grow = gl.row_ptr(i);
      grow[0] += gs * (p0 - ((*lab)[i] == 0 ? 1.0 : 0.0)) / n;
      grow[1] += gs * (p1 - ((*lab)[i] == 1 ? 1.0 : 0.0)) / n;
    }
  };
  return id;
}

int Tape::add_scaled(int a, int b, double wa, double wb) {
  const Matrix& av = nodes_[a].value;
  const Matrix& bv = nodes_[b].value;
  if (!av.same_shape(bv)) throw std::invalid_argument("add_scaled: shape mismatch");
  Matrix out(av.rows, av.cols);
  for (size_t i = 0; i < out.size(); ++i) out.data[i] = wa * av.data[i] + wb * bv.data[i];
  int id = push(std::move(out));
  int self = id;
  nodes_[self].back = [a, b, wa, wb, self](Tape& t) {
    const Matrix& g = t.nodes_[self].grad;
    Matrix& ga = t.grad_mut(a);
    Matrix& gb = t.grad_mut(b);
    for (size_t i = 0; i < g.size(); ++i) {
      ga.data[i] += wa * g.data[i];
      gb.data[i] += wb * g.data[i];
    }
  };
  return id;
}

void Tape::backward(int root, std::vector<Matrix>* param_grads) {
  if (root < 0 || root >= static_cast<int>(nodes_.size())) throw std::invalid_argument("backward: bad root");
  const Matrix& rv = nodes_[root].value;
  if (rv.rows != 1 || rv.cols != 1) throw std::invalid_argument("backward: root must be scalar");
  for (auto& n : nodes_) {
    n.grad = Matrix(n.value.rows, n.value.cols);
  }
  nodes_[root].grad.data[0] = 1.0;
  for (int id = root; id >= 0; --id) {
    if (nodes_[id].back) nodes_[id].back(*this);
  }
  for (auto& n : nodes_) {
    if (n.param_index < 0) continue;
    if (param_grads) {
      Matrix& dst = (*param_grads)[n.param_index];
      for (size_t i = 0; i < dst.size(); ++i) dst.data[i] += n.grad.data[i];
    } else if (params_) {
      // store grads are mutable by convention when no buffer is supplied
      Matrix& dst = const_cast<ParamStore*>(params_)->grad(n.param_index);
      for (size_t i = 0; i < dst.size(); ++i) dst.data[i] += n.grad.data[i];
    }
  }
}

}  // namespace osda::nn
