#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "liam/nn/tape.hpp"

namespace liam::nn {

enum class Activation { None, Relu };

namespace detail {

template <typename Scalar>
void require_same_shape(const char* op, const Var<Scalar>& a, const Var<Scalar>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": lhs is " + shape_string(a.value()) + " but rhs is " +
                         shape_string(b.value()));
  }
}

template <typename Scalar>
void require_finite(const char* op, const Tensor<Scalar>& m) {
  if (!m.allFinite()) throw NumericError(std::string(op) + ": non-finite input");
}

}  // namespace detail

template <typename Scalar>
Var<Scalar> matmul(const Var<Scalar>& a, const Var<Scalar>& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: lhs is " + shape_string(a.value()) + " but rhs is " + shape_string(b.value()));
  }
  Tape<Scalar>& t = *a.tape();
  const int ia = a.id(), ib = b.id();
  return t.record(a.value() * b.value(), {a, b}, [ia, ib](Tape<Scalar>& tp, int self) {
    const auto& g = tp.grad(self);
    if (tp.requires_grad(ia)) tp.accumulate(ia, g * tp.value(ib).transpose());
    if (tp.requires_grad(ib)) tp.accumulate(ib, tp.value(ia).transpose() * g);
  });
}

/// y = act(x W + b), b broadcast over rows.
template <typename Scalar>
Var<Scalar> linear_forward(const Var<Scalar>& x, const Var<Scalar>& w, const Var<Scalar>& b,
                           Activation act = Activation::None) {
  if (x.cols() != w.rows()) {
    throw DimensionError("linear: input x is " + shape_string(x.value()) + " but weight W is " +
                         shape_string(w.value()));
  }
  if (b.rows() != 1 || b.cols() != w.cols()) {
    throw DimensionError("linear: weight W is " + shape_string(w.value()) + " but bias b is " +
                         shape_string(b.value()));
  }
  Tape<Scalar>& t = *x.tape();
  Tensor<Scalar> y = x.value() * w.value();
  y.rowwise() += b.value().row(0);
  if (act == Activation::Relu) y = y.cwiseMax(Scalar(0));
  const int ix = x.id(), iw = w.id(), ib = b.id();
  return t.record(std::move(y), {x, w, b}, [ix, iw, ib, act](Tape<Scalar>& tp, int self) {
    Tensor<Scalar> g = tp.grad(self);
    if (act == Activation::Relu) {
      g = (tp.value(self).array() > Scalar(0)).select(g.array(), Scalar(0)).matrix();
    }
    if (tp.requires_grad(ix)) tp.accumulate(ix, g * tp.value(iw).transpose());
    if (tp.requires_grad(iw)) tp.accumulate(iw, tp.value(ix).transpose() * g);
    if (tp.requires_grad(ib)) tp.accumulate(ib, g.colwise().sum());
  });
}

template <typename Scalar>
Var<Scalar> add(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require_same_shape("add", a, b);
  const int ia = a.id(), ib = b.id();
  return a.tape()->record(a.value() + b.value(), {a, b}, [ia, ib](Tape<Scalar>& tp, int self) {
    tp.accumulate(ia, tp.grad(self));
    tp.accumulate(ib, tp.grad(self));
  });
}

template <typename Scalar>
Var<Scalar> sub(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require_same_shape("sub", a, b);
  const int ia = a.id(), ib = b.id();
  return a.tape()->record(a.value() - b.value(), {a, b}, [ia, ib](Tape<Scalar>& tp, int self) {
    tp.accumulate(ia, tp.grad(self));
    tp.accumulate(ib, -tp.grad(self));
  });
}

/// Element-wise product.
template <typename Scalar>
Var<Scalar> mul(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require_same_shape("mul", a, b);
  const int ia = a.id(), ib = b.id();
  return a.tape()->record(a.value().cwiseProduct(b.value()), {a, b}, [ia, ib](Tape<Scalar>& tp, int self) {
    const auto& g = tp.grad(self);
    if (tp.requires_grad(ia)) tp.accumulate(ia, g.cwiseProduct(tp.value(ib)));
    if (tp.requires_grad(ib)) tp.accumulate(ib, g.cwiseProduct(tp.value(ia)));
  });
}

/// Element-wise quotient.
template <typename Scalar>
Var<Scalar> div(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require_same_shape("div", a, b);
  const int ia = a.id(), ib = b.id();
  return a.tape()->record(a.value().cwiseQuotient(b.value()), {a, b}, [ia, ib](Tape<Scalar>& tp, int self) {
    const auto& g = tp.grad(self);
    const auto& bv = tp.value(ib);
    if (tp.requires_grad(ia)) tp.accumulate(ia, g.cwiseQuotient(bv));
    if (tp.requires_grad(ib)) {
      tp.accumulate(ib, -(g.cwiseProduct(tp.value(self))).cwiseQuotient(bv));
    }
  });
}

template <typename Scalar>
Var<Scalar> operator+(const Var<Scalar>& a, const Var<Scalar>& b) { return add(a, b); }
template <typename Scalar>
Var<Scalar> operator-(const Var<Scalar>& a, const Var<Scalar>& b) { return sub(a, b); }

/// x + b with the row vector b broadcast over rows.
template <typename Scalar>
Var<Scalar> add_bias(const Var<Scalar>& x, const Var<Scalar>& b) {
  if (b.rows() != 1 || b.cols() != x.cols()) {
    throw DimensionError("add_bias: x is " + shape_string(x.value()) + " but bias is " + shape_string(b.value()));
  }
  Tensor<Scalar> y = x.value();
  y.rowwise() += b.value().row(0);
  const int ix = x.id(), ib = b.id();
  return x.tape()->record(std::move(y), {x, b}, [ix, ib](Tape<Scalar>& tp, int self) {
    tp.accumulate(ix, tp.grad(self));
    if (tp.requires_grad(ib)) tp.accumulate(ib, tp.grad(self).colwise().sum());
  });
}

template <typename Scalar>
Var<Scalar> scale(const Var<Scalar>& x, Scalar s) {
  const int ix = x.id();
  return x.tape()->record(x.value() * s, {x}, [ix, s](Tape<Scalar>& tp, int self) {
    tp.accumulate(ix, tp.grad(self) * s);
  });
}

template <typename Scalar>
Var<Scalar> operator*(Scalar s, const Var<Scalar>& x) { return scale(x, s); }

template <typename Scalar>
Var<Scalar> add_scalar(const Var<Scalar>& x, Scalar s) {
  const int ix = x.id();
  Tensor<Scalar> y = x.value().array() + s;
  return x.tape()->record(std::move(y), {x}, [ix](Tape<Scalar>& tp, int self) {
    tp.accumulate(ix, tp.grad(self));
  });
}

/// Multiplies row i of x by the constant weights(i). Used for masks.
template <typename Scalar>
Var<Scalar> scale_rows(const Var<Scalar>& x, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& weights) {
  if (weights.size() != x.rows()) {
    throw DimensionError("scale_rows: x is " + shape_string(x.value()) + " but weights have " +
                         std::to_string(weights.size()) + " entries");
  }
  Tensor<Scalar> y = weights.asDiagonal() * x.value();
  const int ix = x.id();
  return x.tape()->record(std::move(y), {x}, [ix, weights](Tape<Scalar>& tp, int self) {
    tp.accumulate(ix, weights.asDiagonal() * tp.grad(self));
  });
}

template <typename Scalar>
Var<Scalar> relu(const Var<Scalar>& x) {
  const int ix = x.id();
  return x.tape()->record(x.value().cwiseMax(Scalar(0)), {x}, [ix](Tape<Scalar>& tp, int self) {
    tp.accumulate(ix, (tp.value(ix).array() > Scalar(0)).select(tp.grad(self).array(), Scalar(0)).matrix());
  });
}

template <typename Scalar>
Var<Scalar> sigmoid(const Var<Scalar>& x) {
  const int ix = x.id();
  Tensor<Scalar> y = (Scalar(1) + (-x.value().array()).exp()).inverse();
  return x.tape()->record(std::move(y), {x}, [ix](Tape<Scalar>& tp, int self) {
    const auto& s = tp.value(self).array();
    tp.accumulate(ix, (tp.grad(self).array() * s * (Scalar(1) - s)).matrix());
  });
}

template <typename Scalar>
Var<Scalar> tanh(const Var<Scalar>& x) {
  const int ix = x.id();
  Tensor<Scalar> y = x.value().array().tanh();
  return x.tape()->record(std::move(y), {x}, [ix](Tape<Scalar>& tp, int self) {
    const auto& y = tp.value(self).array();
    tp.accumulate(ix, (tp.grad(self).array() * (Scalar(1) - y.square())).matrix());
  });
}

template <typename Scalar>
Var<Scalar> exp(const Var<Scalar>& x) {
  const int ix = x.id();
  Tensor<Scalar> y = x.value().array().exp();
  return x.tape()->record(std::move(y), {x}, [ix](Tape<Scalar>& tp, int self) {
    tp.accumulate(ix, tp.grad(self).cwiseProduct(tp.value(self)));
  });
}

template <typename Scalar>
Var<Scalar> log(const Var<Scalar>& x) {
  const int ix = x.id();
  Tensor<Scalar> y = x.value().array().log();
  return x.tape()->record(std::move(y), {x}, [ix](Tape<Scalar>& tp, int self) {
    tp.accumulate(ix, tp.grad(self).cwiseQuotient(tp.value(ix)));
  });
}

template <typename Scalar>
Var<Scalar> square(const Var<Scalar>& x) {
  const int ix = x.id();
  return x.tape()->record(x.value().array().square().matrix(), {x}, [ix](Tape<Scalar>& tp, int self) {
    tp.accumulate(ix, Scalar(2) * tp.grad(self).cwiseProduct(tp.value(ix)));
  });
}

/// Clamps into [lo, hi]; the gradient is zero where the clamp is active.
template <typename Scalar>
Var<Scalar> clamp(const Var<Scalar>& x, Scalar lo, Scalar hi) {
  const int ix = x.id();
  Tensor<Scalar> y = x.value().cwiseMax(lo).cwiseMin(hi);
  return x.tape()->record(std::move(y), {x}, [ix, lo, hi](Tape<Scalar>& tp, int self) {
    const auto& xv = tp.value(ix).array();
    tp.accumulate(ix, ((xv >= lo) && (xv <= hi)).select(tp.grad(self).array(), Scalar(0)).matrix());
  });
}

template <typename Scalar>
Var<Scalar> sum(const Var<Scalar>& x) {
  const int ix = x.id();
  const Eigen::Index r = x.rows(), c = x.cols();
  Tensor<Scalar> y(1, 1);
  y(0, 0) = x.value().sum();
  return x.tape()->record(std::move(y), {x}, [ix, r, c](Tape<Scalar>& tp, int self) {
    tp.accumulate(ix, Tensor<Scalar>::Constant(r, c, tp.grad(self)(0, 0)));
  });
}

template <typename Scalar>
Var<Scalar> mean(const Var<Scalar>& x) {
  if (x.value().size() == 0) throw DimensionError("mean: empty input");
  return scale(sum(x), Scalar(1) / static_cast<Scalar>(x.value().size()));
}

/// Per-row sum, rows x 1.
template <typename Scalar>
Var<Scalar> row_sum(const Var<Scalar>& x) {
  const int ix = x.id();
  const Eigen::Index c = x.cols();
  Tensor<Scalar> y = x.value().rowwise().sum();
  return x.tape()->record(std::move(y), {x}, [ix, c](Tape<Scalar>& tp, int self) {
    tp.accumulate(ix, tp.grad(self).replicate(1, c));
  });
}

template <typename Scalar>
Var<Scalar> transpose(const Var<Scalar>& x) {
  const int ix = x.id();
  Tensor<Scalar> y = x.value().transpose();
  return x.tape()->record(std::move(y), {x}, [ix](Tape<Scalar>& tp, int self) {
    tp.accumulate(ix, tp.grad(self).transpose());
  });
}

template <typename Scalar>
Var<Scalar> detach(const Var<Scalar>& x) {
  return x.tape()->constant(x.value());
}

template <typename Scalar>
Var<Scalar> concat_cols(const std::vector<Var<Scalar>>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  bool needs = false;
  for (const auto& p : parts) {
    if (p.rows() != rows) {
      throw DimensionError("concat_cols: part is " + shape_string(p.value()) + " but expected " +
                           std::to_string(rows) + " rows");
    }
    cols += p.cols();
    needs = needs || p.requires_grad();
  }
  Tensor<Scalar> y(rows, cols);
  std::vector<std::pair<int, Eigen::Index>> layout;
  Eigen::Index offset = 0;
  for (const auto& p : parts) {
    y.middleCols(offset, p.cols()) = p.value();
    layout.emplace_back(p.id(), p.cols());
    offset += p.cols();
  }
  return parts.front().tape()->record_if(std::move(y), needs, [layout](Tape<Scalar>& tp, int self) {
    const auto& g = tp.grad(self);
    Eigen::Index off = 0;
    for (const auto& [id, width] : layout) {
      if (tp.requires_grad(id)) tp.accumulate(id, g.middleCols(off, width));
      off += width;
    }
  });
}

template <typename Scalar>
Var<Scalar> slice_cols(const Var<Scalar>& x, Eigen::Index start, Eigen::Index width) {
  if (start < 0 || width < 0 || start + width > x.cols()) {
    throw DimensionError("slice_cols: columns [" + std::to_string(start) + ", " + std::to_string(start + width) +
                         ") out of range for " + shape_string(x.value()));
  }
  const int ix = x.id();
  const Eigen::Index rows = x.rows(), cols = x.cols();
  Tensor<Scalar> y = x.value().middleCols(start, width);
  return x.tape()->record(std::move(y), {x}, [ix, rows, cols, start, width](Tape<Scalar>& tp, int self) {
    Tensor<Scalar> g = Tensor<Scalar>::Zero(rows, cols);
    g.middleCols(start, width) = tp.grad(self);
    tp.accumulate(ix, g);
  });
}

template <typename Scalar>
Var<Scalar> concat_rows(const std::vector<Var<Scalar>>& parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  const Eigen::Index cols = parts.front().cols();
  Eigen::Index rows = 0;
  bool needs = false;
  for (const auto& p : parts) {
    if (p.cols() != cols) {
      throw DimensionError("concat_rows: part is " + shape_string(p.value()) + " but expected " +
                           std::to_string(cols) + " columns");
    }
    rows += p.rows();
    needs = needs || p.requires_grad();
  }
  Tensor<Scalar> y(rows, cols);
  std::vector<std::pair<int, Eigen::Index>> layout;
  Eigen::Index offset = 0;
  for (const auto& p : parts) {
    y.middleRows(offset, p.rows()) = p.value();
    layout.emplace_back(p.id(), p.rows());
    offset += p.rows();
  }
  return parts.front().tape()->record_if(std::move(y), needs, [layout](Tape<Scalar>& tp, int self) {
    const auto& g = tp.grad(self);
    Eigen::Index off = 0;
    for (const auto& [id, height] : layout) {
      if (tp.requires_grad(id)) tp.accumulate(id, g.middleRows(off, height));
      off += height;
    }
  });
}

template <typename Scalar>
Var<Scalar> slice_rows(const Var<Scalar>& x, Eigen::Index start, Eigen::Index height) {
  if (start < 0 || height < 0 || start + height > x.rows()) {
    throw DimensionError("slice_rows: rows [" + std::to_string(start) + ", " + std::to_string(start + height) +
                         ") out of range for " + shape_string(x.value()));
  }
  const int ix = x.id();
  const Eigen::Index rows = x.rows(), cols = x.cols();
  Tensor<Scalar> y = x.value().middleRows(start, height);
  return x.tape()->record(std::move(y), {x}, [ix, rows, cols, start, height](Tape<Scalar>& tp, int self) {
    Tensor<Scalar> g = Tensor<Scalar>::Zero(rows, cols);
    g.middleRows(start, height) = tp.grad(self);
    tp.accumulate(ix, g);
  });
}

/// Row-wise softmax computed with max subtraction.
template <typename Scalar>
Var<Scalar> softmax(const Var<Scalar>& logits) {
  if (logits.cols() < 1) throw DimensionError("softmax: need at least one column");
  detail::require_finite("softmax", logits.value());
  Tensor<Scalar> y = logits.value();
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    y.row(i).array() -= y.row(i).maxCoeff();
    y.row(i) = y.row(i).array().exp();
    y.row(i) /= y.row(i).sum();
  }
  const int ix = logits.id();
  return logits.tape()->record(std::move(y), {logits}, [ix](Tape<Scalar>& tp, int self) {
    const auto& p = tp.value(self);
    const auto& g = tp.grad(self);
    Tensor<Scalar> dot = g.cwiseProduct(p).rowwise().sum();
    Tensor<Scalar> gx = p.cwiseProduct(g - dot.replicate(1, p.cols()));
    tp.accumulate(ix, gx);
  });
}

/// Row-wise log-softmax.
template <typename Scalar>
Var<Scalar> log_softmax(const Var<Scalar>& logits) {
  if (logits.cols() < 1) throw DimensionError("log_softmax: need at least one column");
  detail::require_finite("log_softmax", logits.value());
  Tensor<Scalar> y = logits.value();
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    const Scalar m = y.row(i).maxCoeff();
    const Scalar lse = m + std::log((y.row(i).array() - m).exp().sum());
    y.row(i).array() -= lse;
  }
  const int ix = logits.id();
  return logits.tape()->record(std::move(y), {logits}, [ix](Tape<Scalar>& tp, int self) {
    const auto& ls = tp.value(self);
    const auto& g = tp.grad(self);
    Tensor<Scalar> p = ls.array().exp();
    Tensor<Scalar> gsum = g.rowwise().sum();
    tp.accumulate(ix, g - p.cwiseProduct(gsum.replicate(1, p.cols())));
  });
}

/// Gathers x(i, index[i]) into a rows x 1 column.
template <typename Scalar>
Var<Scalar> pick(const Var<Scalar>& x, const std::vector<int>& index) {
  if (static_cast<Eigen::Index>(index.size()) != x.rows()) {
    throw DimensionError("pick: x is " + shape_string(x.value()) + " but got " + std::to_string(index.size()) +
                         " indices");
  }
  Tensor<Scalar> y(x.rows(), 1);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const int k = index[static_cast<std::size_t>(i)];
    if (k < 0 || k >= x.cols()) {
      throw DimensionError("pick: index " + std::to_string(k) + " out of range for " + std::to_string(x.cols()) +
                           " columns");
    }
    y(i, 0) = x.value()(i, k);
  }
  const int ix = x.id();
  const Eigen::Index rows = x.rows(), cols = x.cols();
  return x.tape()->record(std::move(y), {x}, [ix, index, rows, cols](Tape<Scalar>& tp, int self) {
    Tensor<Scalar> g = Tensor<Scalar>::Zero(rows, cols);
    const auto& go = tp.grad(self);
    for (Eigen::Index i = 0; i < rows; ++i) g(i, index[static_cast<std::size_t>(i)]) += go(i, 0);
    tp.accumulate(ix, g);
  });
}

/// Row-wise L2 normalisation. A zero-norm row is a numeric error.
template <typename Scalar>
Var<Scalar> row_normalize(const Var<Scalar>& x) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> norms = x.value().rowwise().norm();
  for (Eigen::Index i = 0; i < norms.size(); ++i) {
    if (!(norms(i) > Scalar(0))) {
      throw NumericError("row_normalize: row " + std::to_string(i) + " has zero norm");
    }
  }
  Tensor<Scalar> y = norms.cwiseInverse().asDiagonal() * x.value();
  const int ix = x.id();
  return x.tape()->record(std::move(y), {x}, [ix, norms](Tape<Scalar>& tp, int self) {
    const auto& yv = tp.value(self);
    const auto& g = tp.grad(self);
    Tensor<Scalar> dot = g.cwiseProduct(yv).rowwise().sum();
    Tensor<Scalar> gx = norms.cwiseInverse().asDiagonal() * (g - yv.cwiseProduct(dot.replicate(1, yv.cols())));
    tp.accumulate(ix, gx);
  });
}

/// Fused LSTM cell on gate pre-activations laid out as [i | f | g | o].
/// Returns (h', c').
template <typename Scalar>
std::pair<Var<Scalar>, Var<Scalar>> lstm_cell(const Var<Scalar>& preact, const Var<Scalar>& c) {
  const Eigen::Index hidden = c.cols();
  if (preact.cols() != 4 * hidden || preact.rows() != c.rows()) {
    throw DimensionError("lstm_cell: gate pre-activations are " + shape_string(preact.value()) +
                         " but cell state is " + shape_string(c.value()));
  }
  const auto& z = preact.value();
  const Eigen::Index b = z.rows();
  // cache = [i | f | g | o | tanh(c')], outputs = [h' | c']
  Tensor<Scalar> cache(b, 5 * hidden);
  auto sig = [](const auto& v) { return (Scalar(1) + (-v.array()).exp()).inverse().matrix(); };
  cache.middleCols(0, hidden) = sig(z.middleCols(0, hidden));
  cache.middleCols(hidden, hidden) = sig(z.middleCols(hidden, hidden));
  cache.middleCols(2 * hidden, hidden) = z.middleCols(2 * hidden, hidden).array().tanh().matrix();
  cache.middleCols(3 * hidden, hidden) = sig(z.middleCols(3 * hidden, hidden));
  Tensor<Scalar> out(b, 2 * hidden);
  out.middleCols(hidden, hidden) =
      cache.middleCols(hidden, hidden).cwiseProduct(c.value()) +
      cache.middleCols(0, hidden).cwiseProduct(cache.middleCols(2 * hidden, hidden));
  cache.middleCols(4 * hidden, hidden) = out.middleCols(hidden, hidden).array().tanh().matrix();
  out.middleCols(0, hidden) = cache.middleCols(3 * hidden, hidden).cwiseProduct(cache.middleCols(4 * hidden, hidden));

  const int iz = preact.id(), ic = c.id();
  Var<Scalar> joint = preact.tape()->record(
      std::move(out), {preact, c}, [iz, ic, hidden, cache = std::move(cache)](Tape<Scalar>& tp, int self) {
        const auto& g = tp.grad(self);
        const auto gi = cache.middleCols(0, hidden).array();
        const auto gf = cache.middleCols(hidden, hidden).array();
        const auto gg = cache.middleCols(2 * hidden, hidden).array();
        const auto go = cache.middleCols(3 * hidden, hidden).array();
        const auto tc = cache.middleCols(4 * hidden, hidden).array();
        const auto dh = g.middleCols(0, hidden).array();
        Tensor<Scalar> dc = g.middleCols(hidden, hidden) + (dh * go * (Scalar(1) - tc.square())).matrix();
        const auto dca = dc.array();
        Tensor<Scalar> dz(g.rows(), 4 * hidden);
        dz.middleCols(0, hidden) = (dca * gg * gi * (Scalar(1) - gi)).matrix();
        dz.middleCols(hidden, hidden) = (dca * tp.value(ic).array() * gf * (Scalar(1) - gf)).matrix();
        dz.middleCols(2 * hidden, hidden) = (dca * gi * (Scalar(1) - gg.square())).matrix();
        dz.middleCols(3 * hidden, hidden) = (dh * tc * go * (Scalar(1) - go)).matrix();
        if (tp.requires_grad(iz)) tp.accumulate(iz, dz);
        if (tp.requires_grad(ic)) tp.accumulate(ic, (dca * gf).matrix());
      });
  return {slice_cols(joint, 0, hidden), slice_cols(joint, hidden, hidden)};
}

}  // namespace liam::nn
