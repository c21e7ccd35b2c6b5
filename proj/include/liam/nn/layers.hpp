#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "liam/nn/ops.hpp"

namespace liam::nn {

/// Dense layer y = act(x W + b) with W stored in x out layout.
template <typename Scalar>
struct Linear {
  Parameter<Scalar>* weight = nullptr;
  Parameter<Scalar>* bias = nullptr;

  static Linear create(ParameterStore<Scalar>& store, const std::string& name, int in, int out, Rng& rng) {
    const Scalar bound = Scalar(1) / std::sqrt(static_cast<Scalar>(in));
    Linear layer;
    layer.weight = &store.add(name + ".weight", uniform_tensor<Scalar>(in, out, bound, rng));
    layer.bias = &store.add(name + ".bias", uniform_tensor<Scalar>(1, out, bound, rng));
    return layer;
  }

  int in_features() const { return static_cast<int>(weight->value.rows()); }
  int out_features() const { return static_cast<int>(weight->value.cols()); }

  Var<Scalar> operator()(Tape<Scalar>& tape, const Var<Scalar>& x, Activation act = Activation::None) const {
    return linear_forward(x, tape.parameter(*weight), tape.parameter(*bias), act);
  }
};

/// Stack of ReLU hidden layers; the last layer's activation is chosen by the caller.
template <typename Scalar>
struct Mlp {
  std::vector<Linear<Scalar>> layers;

  static Mlp create(ParameterStore<Scalar>& store, const std::string& name, const std::vector<int>& widths,
                    Rng& rng) {
    Mlp mlp;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
      mlp.layers.push_back(
          Linear<Scalar>::create(store, name + "." + std::to_string(i), widths[i], widths[i + 1], rng));
    }
    return mlp;
  }

  Var<Scalar> operator()(Tape<Scalar>& tape, Var<Scalar> x, Activation last = Activation::Relu) const {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      x = layers[i](tape, x, i + 1 == layers.size() ? last : Activation::Relu);
    }
    return x;
  }
};

/// LSTM cell. Gate columns are ordered input, forget, candidate, output.
template <typename Scalar>
struct LstmCell {
  Parameter<Scalar>* input_weight = nullptr;   // in x 4H
  Parameter<Scalar>* hidden_weight = nullptr;  // H x 4H
  Parameter<Scalar>* bias = nullptr;           // 1 x 4H
  int hidden = 0;

  static LstmCell create(ParameterStore<Scalar>& store, const std::string& name, int in, int hidden, Rng& rng) {
    const Scalar bound = Scalar(1) / std::sqrt(static_cast<Scalar>(hidden));
    LstmCell cell;
    cell.hidden = hidden;
    cell.input_weight = &store.add(name + ".input_weight", uniform_tensor<Scalar>(in, 4 * hidden, bound, rng));
    cell.hidden_weight = &store.add(name + ".hidden_weight", uniform_tensor<Scalar>(hidden, 4 * hidden, bound, rng));
    Tensor<Scalar> b = uniform_tensor<Scalar>(1, 4 * hidden, bound, rng);
    b.middleCols(hidden, hidden).setOnes();
    cell.bias = &store.add(name + ".bias", std::move(b));
    return cell;
  }

  int input_size() const { return static_cast<int>(input_weight->value.rows()); }
};

/// One recurrent step; returns (h', c').
template <typename Scalar>
std::pair<Var<Scalar>, Var<Scalar>> lstm_step(Tape<Scalar>& tape, const Var<Scalar>& x, const Var<Scalar>& h,
                                              const Var<Scalar>& c, const LstmCell<Scalar>& cell) {
  if (x.cols() != cell.input_size()) {
    throw DimensionError("lstm_step: input x is " + shape_string(x.value()) + " but cell expects " +
                         std::to_string(cell.input_size()) + " features");
  }
  if (h.cols() != cell.hidden || c.cols() != cell.hidden || h.rows() != x.rows() || c.rows() != x.rows()) {
    throw DimensionError("lstm_step: hidden state is " + shape_string(h.value()) + " and cell state is " +
                         shape_string(c.value()) + " for hidden width " + std::to_string(cell.hidden));
  }
  Var<Scalar> pre = linear_forward(x, tape.parameter(*cell.input_weight), tape.parameter(*cell.bias));
  pre = add(pre, matmul(h, tape.parameter(*cell.hidden_weight)));
  return lstm_cell(pre, c);
}

}  // namespace liam::nn
