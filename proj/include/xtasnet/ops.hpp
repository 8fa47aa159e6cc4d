#ifndef XTASNET_OPS_HPP
#define XTASNET_OPS_HPP

#include <cmath>
#include <utility>
#include <vector>

#include "xtasnet/tape.hpp"

// Elementwise, matrix and reduction primitives on tape variables.
// Every op appends one node; its closure accumulates into the parents'
// gradient buffers when the reverse sweep reaches it.

namespace xtasnet::ad {

namespace detail {

template <class S>
Tape<S>& same_tape(const Var<S>& a, const Var<S>& b) {
  if (a.tape() != b.tape() || a.tape() == nullptr)
    throw ContractError("op: variables live on different tapes");
  return *a.tape();
}

template <class S>
void same_shape(const Var<S>& a, const Var<S>& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError(std::string(op) + ": shape mismatch");
}

template <class S>
void expect_scalar(const Var<S>& a, const char* op) {
  if (a.rows() != 1 || a.cols() != 1)
    throw ShapeError(std::string(op) + ": expected a 1x1 scalar");
}

}  // namespace detail

template <class S>
Var<S> add(const Var<S>& a, const Var<S>& b) {
  Tape<S>& t = detail::same_tape(a, b);
  detail::same_shape(a, b, "add");
  MatrixX<S> v = a.value() + b.value();
  const int ia = a.id(), ib = b.id(), oid = static_cast<int>(t.size());
  return t.make(std::move(v), t.needs_grad(ia) || t.needs_grad(ib),
                [ia, ib, oid](Tape<S>& t) {
                  const MatrixX<S>& g = t.grad(oid);
                  if (t.needs_grad(ia)) t.grad_buffer(ia) += g;
                  if (t.needs_grad(ib)) t.grad_buffer(ib) += g;
                });
}

template <class S>
Var<S> sub(const Var<S>& a, const Var<S>& b) {
  Tape<S>& t = detail::same_tape(a, b);
  detail::same_shape(a, b, "sub");
  MatrixX<S> v = a.value() - b.value();
  const int ia = a.id(), ib = b.id(), oid = static_cast<int>(t.size());
  return t.make(std::move(v), t.needs_grad(ia) || t.needs_grad(ib),
                [ia, ib, oid](Tape<S>& t) {
                  const MatrixX<S>& g = t.grad(oid);
                  if (t.needs_grad(ia)) t.grad_buffer(ia) += g;
                  if (t.needs_grad(ib)) t.grad_buffer(ib) -= g;
                });
}

// Hadamard product.
template <class S>
Var<S> mul(const Var<S>& a, const Var<S>& b) {
  Tape<S>& t = detail::same_tape(a, b);
  detail::same_shape(a, b, "mul");
  MatrixX<S> v = a.value().cwiseProduct(b.value());
  const int ia = a.id(), ib = b.id(), oid = static_cast<int>(t.size());
  return t.make(std::move(v), t.needs_grad(ia) || t.needs_grad(ib),
                [ia, ib, oid](Tape<S>& t) {
                  const MatrixX<S>& g = t.grad(oid);
                  if (t.needs_grad(ia))
                    t.grad_buffer(ia) += g.cwiseProduct(t.value(ib));
                  if (t.needs_grad(ib))
                    t.grad_buffer(ib) += g.cwiseProduct(t.value(ia));
                });
}

// Elementwise quotient; caller guarantees b is bounded away from zero.
template <class S>
Var<S> div(const Var<S>& a, const Var<S>& b) {
  Tape<S>& t = detail::same_tape(a, b);
  detail::same_shape(a, b, "div");
  MatrixX<S> v = a.value().cwiseQuotient(b.value());
  const int ia = a.id(), ib = b.id(), oid = static_cast<int>(t.size());
  return t.make(std::move(v), t.needs_grad(ia) || t.needs_grad(ib),
                [ia, ib, oid](Tape<S>& t) {
                  const MatrixX<S>& g = t.grad(oid);
                  const MatrixX<S>& bv = t.value(ib);
                  if (t.needs_grad(ia)) t.grad_buffer(ia) += g.cwiseQuotient(bv);
                  if (t.needs_grad(ib))
                    t.grad_buffer(ib) -=
                        g.cwiseProduct(t.value(oid)).cwiseQuotient(bv);
                });
}

template <class S>
Var<S> scale(const Var<S>& a, S c) {
  Tape<S>& t = *a.tape();
  MatrixX<S> v = a.value() * c;
  const int ia = a.id(), oid = static_cast<int>(t.size());
  return t.make(std::move(v), t.needs_grad(ia), [ia, oid, c](Tape<S>& t) {
    t.grad_buffer(ia) += t.grad(oid) * c;
  });
}

template <class S>
Var<S> neg(const Var<S>& a) {
  return scale(a, S(-1));
}

template <class S>
Var<S> add_const(const Var<S>& a, S c) {
  Tape<S>& t = *a.tape();
  MatrixX<S> v = a.value().array() + c;
  const int ia = a.id(), oid = static_cast<int>(t.size());
  return t.make(std::move(v), t.needs_grad(ia), [ia, oid](Tape<S>& t) {
    t.grad_buffer(ia) += t.grad(oid);
  });
}

template <class S>
Var<S> matmul(const Var<S>& a, const Var<S>& b) {
  Tape<S>& t = detail::same_tape(a, b);
  if (a.cols() != b.rows()) throw ShapeError("matmul: inner dims differ");
  MatrixX<S> v;
  v.noalias() = a.value() * b.value();
  const int ia = a.id(), ib = b.id(), oid = static_cast<int>(t.size());
  return t.make(std::move(v), t.needs_grad(ia) || t.needs_grad(ib),
                [ia, ib, oid](Tape<S>& t) {
                  const MatrixX<S>& g = t.grad(oid);
                  if (t.needs_grad(ia))
                    t.grad_buffer(ia).noalias() += g * t.value(ib).transpose();
                  if (t.needs_grad(ib))
                    t.grad_buffer(ib).noalias() += t.value(ia).transpose() * g;
                });
}

// a * b^T without materializing the transpose on the tape.
template <class S>
Var<S> matmul_nt(const Var<S>& a, const Var<S>& b) {
  Tape<S>& t = detail::same_tape(a, b);
  if (a.cols() != b.cols()) throw ShapeError("matmul_nt: inner dims differ");
  MatrixX<S> v;
  v.noalias() = a.value() * b.value().transpose();
  const int ia = a.id(), ib = b.id(), oid = static_cast<int>(t.size());
  return t.make(std::move(v), t.needs_grad(ia) || t.needs_grad(ib),
                [ia, ib, oid](Tape<S>& t) {
                  const MatrixX<S>& g = t.grad(oid);
                  if (t.needs_grad(ia))
                    t.grad_buffer(ia).noalias() += g * t.value(ib);
                  if (t.needs_grad(ib))
                    t.grad_buffer(ib).noalias() += g.transpose() * t.value(ia);
                });
}

// Multiplies every entry by a 1x1 variable.
template <class S>
Var<S> mul_scalar_var(const Var<S>& a, const Var<S>& s) {
  Tape<S>& t = detail::same_tape(a, s);
  detail::expect_scalar(s, "mul_scalar_var");
  MatrixX<S> v = a.value() * s.scalar();
  const int ia = a.id(), is = s.id(), oid = static_cast<int>(t.size());
  return t.make(std::move(v), t.needs_grad(ia) || t.needs_grad(is),
                [ia, is, oid](Tape<S>& t) {
                  const MatrixX<S>& g = t.grad(oid);
                  if (t.needs_grad(ia))
                    t.grad_buffer(ia) += g * t.value(is)(0, 0);
                  if (t.needs_grad(is))
                    t.grad_buffer(is)(0, 0) +=
                        g.cwiseProduct(t.value(ia)).sum();
                });
}

// Adds a 1x1 variable to every entry.
template <class S>
Var<S> add_scalar_var(const Var<S>& a, const Var<S>& s) {
  Tape<S>& t = detail::same_tape(a, s);
  detail::expect_scalar(s, "add_scalar_var");
  MatrixX<S> v = a.value().array() + s.scalar();
  const int ia = a.id(), is = s.id(), oid = static_cast<int>(t.size());
  return t.make(std::move(v), t.needs_grad(ia) || t.needs_grad(is),
                [ia, is, oid](Tape<S>& t) {
                  const MatrixX<S>& g = t.grad(oid);
                  if (t.needs_grad(ia)) t.grad_buffer(ia) += g;
                  if (t.needs_grad(is)) t.grad_buffer(is)(0, 0) += g.sum();
                });
}

template <class S>
Var<S> vsum(const Var<S>& a) {
  Tape<S>& t = *a.tape();
  MatrixX<S> v(1, 1);
  v(0, 0) = a.value().sum();
  const int ia = a.id(), oid = static_cast<int>(t.size());
  return t.make(std::move(v), t.needs_grad(ia), [ia, oid](Tape<S>& t) {
    t.grad_buffer(ia).array() += t.grad(oid)(0, 0);
  });
}

template <class S>
Var<S> vmean(const Var<S>& a) {
  return scale(vsum(a), S(1) / static_cast<S>(a.rows() * a.cols()));
}

// Elementwise natural logarithm; inputs must be positive.
template <class S>
Var<S> vlog(const Var<S>& a) {
  Tape<S>& t = *a.tape();
  MatrixX<S> v = a.value().array().log();
  const int ia = a.id(), oid = static_cast<int>(t.size());
  return t.make(std::move(v), t.needs_grad(ia), [ia, oid](Tape<S>& t) {
    t.grad_buffer(ia).array() +=
        t.grad(oid).array() / t.value(ia).array();
  });
}

template <class S>
Var<S> vsqrt(const Var<S>& a) {
  Tape<S>& t = *a.tape();
  MatrixX<S> v = a.value().array().sqrt();
  const int ia = a.id(), oid = static_cast<int>(t.size());
  return t.make(std::move(v), t.needs_grad(ia), [ia, oid](Tape<S>& t) {
    t.grad_buffer(ia).array() +=
        t.grad(oid).array() / (S(2) * t.value(oid).array());
  });
}

// Gradient passes only where the input is strictly inside (lo, hi).
template <class S>
Var<S> clamp(const Var<S>& a, S lo, S hi) {
  Tape<S>& t = *a.tape();
  MatrixX<S> v = a.value().array().min(hi).max(lo);
  const int ia = a.id(), oid = static_cast<int>(t.size());
  return t.make(std::move(v), t.needs_grad(ia), [ia, oid, lo, hi](Tape<S>& t) {
    const auto& x = t.value(ia).array();
    t.grad_buffer(ia).array() +=
        t.grad(oid).array() * ((x > lo) && (x < hi)).template cast<S>();
  });
}

template <class S>
Var<S> relu(const Var<S>& a) {
  Tape<S>& t = *a.tape();
  MatrixX<S> v = a.value().cwiseMax(S(0));
  const int ia = a.id(), oid = static_cast<int>(t.size());
  return t.make(std::move(v), t.needs_grad(ia), [ia, oid](Tape<S>& t) {
    t.grad_buffer(ia).array() +=
        t.grad(oid).array() *
        (t.value(ia).array() > S(0)).template cast<S>();
  });
}

template <class S>
Var<S> sigmoid(const Var<S>& a) {
  Tape<S>& t = *a.tape();
  MatrixX<S> v = ((-a.value().array()).exp() + S(1)).inverse();
  const int ia = a.id(), oid = static_cast<int>(t.size());
  return t.make(std::move(v), t.needs_grad(ia), [ia, oid](Tape<S>& t) {
    const auto& y = t.value(oid).array();
    t.grad_buffer(ia).array() += t.grad(oid).array() * y * (S(1) - y);
  });
}

// Single-parameter PReLU: x for x > 0, slope * x otherwise.
template <class S>
Var<S> prelu(const Var<S>& a, const Var<S>& slope) {
  Tape<S>& t = detail::same_tape(a, slope);
  detail::expect_scalar(slope, "prelu");
  const S s = slope.scalar();
  MatrixX<S> v =
      (a.value().array() > S(0)).select(a.value(), a.value() * s);
  const int ia = a.id(), is = slope.id(), oid = static_cast<int>(t.size());
  return t.make(std::move(v), t.needs_grad(ia) || t.needs_grad(is),
                [ia, is, oid](Tape<S>& t) {
                  const auto& x = t.value(ia).array();
                  const auto& g = t.grad(oid).array();
                  const S s = t.value(is)(0, 0);
                  const auto pos = (x > S(0)).template cast<S>();
                  if (t.needs_grad(ia))
                    t.grad_buffer(ia).array() +=
                        g * (pos + (S(1) - pos) * s);
                  if (t.needs_grad(is))
                    t.grad_buffer(is)(0, 0) += (g * (S(1) - pos) * x).sum();
                });
}

template <class S>
Var<S> concat_cols(const Var<S>& a, const Var<S>& b) {
  Tape<S>& t = detail::same_tape(a, b);
  if (a.rows() != b.rows()) throw ShapeError("concat_cols: row mismatch");
  MatrixX<S> v(a.rows(), a.cols() + b.cols());
  v.leftCols(a.cols()) = a.value();
  v.rightCols(b.cols()) = b.value();
  const int ia = a.id(), ib = b.id(), oid = static_cast<int>(t.size());
  const Index ca = a.cols(), cb = b.cols();
  return t.make(std::move(v), t.needs_grad(ia) || t.needs_grad(ib),
                [ia, ib, oid, ca, cb](Tape<S>& t) {
                  const MatrixX<S>& g = t.grad(oid);
                  if (t.needs_grad(ia)) t.grad_buffer(ia) += g.leftCols(ca);
                  if (t.needs_grad(ib)) t.grad_buffer(ib) += g.rightCols(cb);
                });
}

// Stacks equally wide blocks on top of each other.
template <class S>
Var<S> concat_rows(const std::vector<Var<S>>& parts) {
  if (parts.empty()) throw ContractError("concat_rows: no inputs");
  Tape<S>& t = *parts.front().tape();
  Index rows = 0;
  const Index cols = parts.front().cols();
  bool ng = false;
  for (const auto& p : parts) {
    if (p.tape() != &t) throw ContractError("concat_rows: mixed tapes");
    if (p.cols() != cols) throw ShapeError("concat_rows: column mismatch");
    rows += p.rows();
    ng = ng || t.needs_grad(p.id());
  }
  MatrixX<S> v(rows, cols);
  std::vector<std::pair<int, Index>> spans;  // (id, first row)
  Index r = 0;
  for (const auto& p : parts) {
    v.middleRows(r, p.rows()) = p.value();
    spans.emplace_back(p.id(), r);
    r += p.rows();
  }
  const int oid = static_cast<int>(t.size());
  return t.make(std::move(v), ng, [spans, oid](Tape<S>& t) {
    const MatrixX<S>& g = t.grad(oid);
    for (const auto& [id, first] : spans) {
      if (t.needs_grad(id))
        t.grad_buffer(id) += g.middleRows(first, t.value(id).rows());
    }
  });
}

template <class S>
Var<S> slice_cols(const Var<S>& a, Index first, Index n) {
  Tape<S>& t = *a.tape();
  if (first < 0 || n < 1 || first + n > a.cols())
    throw ShapeError("slice_cols: range out of bounds");
  MatrixX<S> v = a.value().middleCols(first, n);
  const int ia = a.id(), oid = static_cast<int>(t.size());
  return t.make(std::move(v), t.needs_grad(ia),
                [ia, oid, first, n](Tape<S>& t) {
                  t.grad_buffer(ia).middleCols(first, n) += t.grad(oid);
                });
}

// x + row broadcast over every row (bias add).
template <class S>
Var<S> add_row_broadcast(const Var<S>& x, const Var<S>& row) {
  Tape<S>& t = detail::same_tape(x, row);
  if (row.rows() != 1 || row.cols() != x.cols())
    throw ShapeError("add_row_broadcast: need a 1 x cols(x) row");
  MatrixX<S> v = x.value().rowwise() + row.value().row(0);
  const int ix = x.id(), ir = row.id(), oid = static_cast<int>(t.size());
  return t.make(std::move(v), t.needs_grad(ix) || t.needs_grad(ir),
                [ix, ir, oid](Tape<S>& t) {
                  const MatrixX<S>& g = t.grad(oid);
                  if (t.needs_grad(ix)) t.grad_buffer(ix) += g;
                  if (t.needs_grad(ir)) t.grad_buffer(ir) += g.colwise().sum();
                });
}

// Repeats a 1 x C row k times.
template <class S>
Var<S> broadcast_row(const Var<S>& row, Index k) {
  Tape<S>& t = *row.tape();
  if (row.rows() != 1) throw ShapeError("broadcast_row: input must be a row");
  MatrixX<S> v = row.value().replicate(k, 1);
  const int ir = row.id(), oid = static_cast<int>(t.size());
  return t.make(std::move(v), t.needs_grad(ir), [ir, oid](Tape<S>& t) {
    t.grad_buffer(ir) += t.grad(oid).colwise().sum();
  });
}

// Column means: mean pooling over rows, result 1 x C.
template <class S>
Var<S> rows_mean(const Var<S>& a) {
  Tape<S>& t = *a.tape();
  MatrixX<S> v = a.value().colwise().mean();
  const int ia = a.id(), oid = static_cast<int>(t.size());
  const S inv = S(1) / static_cast<S>(a.rows());
  return t.make(std::move(v), t.needs_grad(ia), [ia, oid, inv](Tape<S>& t) {
    t.grad_buffer(ia).rowwise() += t.grad(oid).row(0) * inv;
  });
}

// Normalizes every row to unit Euclidean norm, y_r = x_r / sqrt(|x_r|^2 + eps).
template <class S>
Var<S> row_l2_normalize(const Var<S>& a, S eps = S(1e-12)) {
  Tape<S>& t = *a.tape();
  VectorX<S> inv_norm =
      (a.value().rowwise().squaredNorm().array() + eps).rsqrt();
  MatrixX<S> v = inv_norm.asDiagonal() * a.value();
  const int ia = a.id(), oid = static_cast<int>(t.size());
  return t.make(
      std::move(v), t.needs_grad(ia),
      [ia, oid, inv_norm = std::move(inv_norm), eps](Tape<S>& t) {
        const MatrixX<S>& g = t.grad(oid);
        const MatrixX<S>& x = t.value(ia);
        // dx_r = (g_r - (g_r . x_r) x_r / (|x_r|^2 + eps)) / norm_r
        const VectorX<S> gx = g.cwiseProduct(x).rowwise().sum();
        const VectorX<S> coef =
            gx.array() * inv_norm.array() * inv_norm.array();
        t.grad_buffer(ia) +=
            inv_norm.asDiagonal() * (g - coef.asDiagonal() * x);
      });
}

// Per-row dot products, result n x 1.
template <class S>
Var<S> row_dot(const Var<S>& a, const Var<S>& b) {
  Tape<S>& t = detail::same_tape(a, b);
  detail::same_shape(a, b, "row_dot");
  MatrixX<S> v = a.value().cwiseProduct(b.value()).rowwise().sum();
  const int ia = a.id(), ib = b.id(), oid = static_cast<int>(t.size());
  return t.make(std::move(v), t.needs_grad(ia) || t.needs_grad(ib),
                [ia, ib, oid](Tape<S>& t) {
                  const VectorX<S> g = t.grad(oid).col(0);
                  if (t.needs_grad(ia))
                    t.grad_buffer(ia) += g.asDiagonal() * t.value(ib);
                  if (t.needs_grad(ib))
                    t.grad_buffer(ib) += g.asDiagonal() * t.value(ia);
                });
}

// Per-row Euclidean norms with an eps inside the square root, n x 1.
template <class S>
Var<S> row_norm(const Var<S>& a, S eps = S(1e-12)) {
  Tape<S>& t = *a.tape();
  MatrixX<S> v =
      (a.value().rowwise().squaredNorm().array() + eps).sqrt();
  const int ia = a.id(), oid = static_cast<int>(t.size());
  return t.make(std::move(v), t.needs_grad(ia), [ia, oid](Tape<S>& t) {
    const VectorX<S> coef =
        t.grad(oid).col(0).cwiseQuotient(t.value(oid).col(0));
    t.grad_buffer(ia) += coef.asDiagonal() * t.value(ia);
  });
}

// out[j,k] = a[j,k] / r[0,k]; divides each column by a row-vector entry.
template <class S>
Var<S> div_colwise_by_row(const Var<S>& a, const Var<S>& r) {
  Tape<S>& t = detail::same_tape(a, r);
  if (r.rows() != 1 || r.cols() != a.cols())
    throw ShapeError("div_colwise_by_row: need a 1 x cols(a) row");
  MatrixX<S> v = a.value().array().rowwise() / r.value().row(0).array();
  const int ia = a.id(), ir = r.id(), oid = static_cast<int>(t.size());
  return t.make(std::move(v), t.needs_grad(ia) || t.needs_grad(ir),
                [ia, ir, oid](Tape<S>& t) {
                  const MatrixX<S>& g = t.grad(oid);
                  const auto rv = t.value(ir).row(0).array();
                  if (t.needs_grad(ia))
                    t.grad_buffer(ia).array() += g.array().rowwise() / rv;
                  if (t.needs_grad(ir))
                    t.grad_buffer(ir).row(0).array() -=
                        (g.cwiseProduct(t.value(oid))).colwise().sum().array() /
                        rv;
                });
}

// Places v[j] at (j, cols[j]) in an n x width matrix of zeros.
template <class S>
Var<S> scatter_col_entries(const Var<S>& v, const std::vector<int>& cols,
                           Index width) {
  Tape<S>& t = *v.tape();
  if (v.cols() != 1 || static_cast<std::size_t>(v.rows()) != cols.size())
    throw ShapeError("scatter_col_entries: need an n x 1 input");
  MatrixX<S> out = MatrixX<S>::Zero(v.rows(), width);
  for (Index j = 0; j < v.rows(); ++j) {
    if (cols[j] < 0 || cols[j] >= width)
      throw ShapeError("scatter_col_entries: column index out of range");
    out(j, cols[j]) = v.value()(j, 0);
  }
  const int iv = v.id(), oid = static_cast<int>(t.size());
  return t.make(std::move(out), t.needs_grad(iv), [iv, cols, oid](Tape<S>& t) {
    const MatrixX<S>& g = t.grad(oid);
    auto& gb = t.grad_buffer(iv);
    for (Index j = 0; j < gb.rows(); ++j) gb(j, 0) += g(j, cols[j]);
  });
}

template <class S>
Var<S> transpose(const Var<S>& a) {
  Tape<S>& t = *a.tape();
  MatrixX<S> v = a.value().transpose();
  const int ia = a.id(), oid = static_cast<int>(t.size());
  return t.make(std::move(v), t.needs_grad(ia), [ia, oid](Tape<S>& t) {
    t.grad_buffer(ia) += t.grad(oid).transpose();
  });
}

// Mean over rows of softmax cross entropy against integer targets.
template <class S>
Var<S> softmax_xent_rows(const Var<S>& logits,
                         const std::vector<int>& targets) {
  Tape<S>& t = *logits.tape();
  const Index n = logits.rows(), c = logits.cols();
  if (static_cast<std::size_t>(n) != targets.size())
    throw ShapeError("softmax_xent_rows: one target per row required");
  const MatrixX<S>& z = logits.value();
  MatrixX<S> probs(n, c);
  S loss = S(0);
  for (Index j = 0; j < n; ++j) {
    if (targets[j] < 0 || targets[j] >= c)
      throw ShapeError("softmax_xent_rows: target out of range");
    const S zmax = z.row(j).maxCoeff();
    probs.row(j) = (z.row(j).array() - zmax).exp();
    const S denom = probs.row(j).sum();
    probs.row(j) /= denom;
    loss += -(z(j, targets[j]) - zmax) + std::log(denom);
  }
  loss /= static_cast<S>(n);
  MatrixX<S> v(1, 1);
  v(0, 0) = loss;
  const int iz = logits.id(), oid = static_cast<int>(t.size());
  return t.make(std::move(v), t.needs_grad(iz),
                [iz, oid, targets, probs = std::move(probs)](Tape<S>& t) {
                  const S g = t.grad(oid)(0, 0);
                  MatrixX<S> d = probs;
                  for (Index j = 0; j < d.rows(); ++j)
                    d(j, targets[j]) -= S(1);
                  t.grad_buffer(iz) += d * (g / static_cast<S>(d.rows()));
                });
}

}  // namespace xtasnet::ad

#endif  // XTASNET_OPS_HPP
