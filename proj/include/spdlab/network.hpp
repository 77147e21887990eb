#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "spdlab/array.hpp"
#include "spdlab/errors.hpp"
#include "spdlab/parameters.hpp"
#include "spdlab/rng.hpp"

namespace spdlab {

enum class Activation { linear, relu, tanh, sigmoid };

inline double apply_activation(Activation act, double x) {
  switch (act) {
    case Activation::linear: return x;
    case Activation::relu: return x > 0 ? x : 0.0;
    case Activation::tanh: return std::tanh(x);
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
  }
  return x;
}

// Derivative expressed through pre-activation and output value.
inline double activation_grad(Activation act, double pre, double out) {
  switch (act) {
    case Activation::linear: return 1.0;
    case Activation::relu: return pre > 0 ? 1.0 : 0.0;
    case Activation::tanh: return 1.0 - out * out;
    case Activation::sigmoid: return out * (1.0 - out);
  }
  return 1.0;
}

struct DenseSpec {
  std::size_t in = 0;
  std::size_t out = 0;
  Activation act = Activation::linear;
};

// Gated recurrent cell (update + reset gates) consuming a [T, in] sequence.
struct RecurrentSpec {
  std::size_t in = 0;
  std::size_t hidden = 0;
};

struct SoftmaxSpec {
  std::size_t classes = 0;
};

using LayerSpec = std::variant<DenseSpec, RecurrentSpec, SoftmaxSpec>;

// Ordered layer list; the seed fixes the initial parameters bit-exactly.
struct NetworkSpec {
  std::vector<LayerSpec> layers;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::size_t spec_input_dim(const LayerSpec& layer) {
  if (auto* d = std::get_if<DenseSpec>(&layer)) return d->in;
  if (auto* r = std::get_if<RecurrentSpec>(&layer)) return r->in;
  return std::get<SoftmaxSpec>(layer).classes;
}

inline std::size_t spec_output_dim(const LayerSpec& layer) {
  if (auto* d = std::get_if<DenseSpec>(&layer)) return d->out;
  if (auto* r = std::get_if<RecurrentSpec>(&layer)) return r->hidden;
  return std::get<SoftmaxSpec>(layer).classes;
}

// Glorot-uniform in +-sqrt(6/(fan_in+fan_out)); biases start at zero.
inline Array glorot(std::size_t rows, std::size_t cols, std::size_t fan_in,
                    std::size_t fan_out, Rng& rng) {
  Array w({rows, cols});
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : w.values()) v = rng.next_double(-bound, bound);
  return w;
}

}  // namespace detail

struct DenseTape {
  Array input;  // [in]
  Array pre;    // [out]
  Array output; // [out]
};

struct GruStepTape {
  Array x;       // [in]
  Array h_prev;  // [hidden]
  Array z, r, c; // gates and candidate, each [hidden]
};

struct GruTape {
  std::vector<GruStepTape> steps;
  Array h_final;
};

struct SoftmaxTape {
  Array output;  // probabilities
};

using LayerTape = std::variant<DenseTape, GruTape, SoftmaxTape>;

// Activation record of one forward pass; sufficient for exact gradients.
struct Tape {
  std::vector<LayerTape> layers;
  Array output;
  std::uint64_t version = 0;
};

// Feed-forward network with an optional single recurrent layer. Dense and
// softmax layers before a recurrent layer are applied per frame of a [T, in]
// input; layers after it act on the final hidden state.
class Network {
 public:
  explicit Network(NetworkSpec spec) : spec_(std::move(spec)) {
    validate_chain();
    init_params();
  }

  Network(NetworkSpec spec, ParameterSet params)
      : spec_(std::move(spec)), params_(std::move(params)) {
    validate_chain();
    locate_recurrent();
  }

  const NetworkSpec& spec() const { return spec_; }
  const ParameterSet& params() const { return params_; }
  ParameterSet& params_mut() { return params_; }
  void replace_params(ParameterSet p) {
    params_.require_same_layout(p, "Network::replace_params");
    // keep the version moving forward so outstanding tapes go stale
    auto v = params_.version();
    params_ = std::move(p);
    while (params_.version() <= v) params_.bump_version();
  }

  bool recurrent() const { return recurrent_index_ >= 0; }

  std::size_t input_dim() const { return detail::spec_input_dim(spec_.layers.front()); }
  std::size_t output_dim() const { return detail::spec_output_dim(spec_.layers.back()); }

  // Forward pass. Plain networks take rank-1 input [in]; recurrent networks
  // take rank-2 input [T, in] and emit the head applied to the last hidden
  // state. The tape records everything backward() needs.
  Array forward(const Array& input, Tape* tape = nullptr) const {
    Tape local;
    Tape& t = tape ? *tape : local;
    t.layers.clear();
    t.version = params_.version();

    if (!recurrent()) {
      if (input.rank() != 1 || input.size() != input_dim())
        throw DimensionError("forward: layer 0 expects [" + std::to_string(input_dim()) +
                             "], got " + input.shape_string());
      Array x = input;
      for (std::size_t i = 0; i < spec_.layers.size(); ++i)
        x = forward_layer(i, x, t);
      t.output = x;
      t.output.require_finite("forward");
      return t.output;
    }

    if (input.rank() != 2 || input.extent(1) != input_dim())
      throw DimensionError("forward: recurrent net expects [T x " +
                           std::to_string(input_dim()) + "], got " + input.shape_string());
    const std::size_t T = input.extent(0);
    const std::size_t k = static_cast<std::size_t>(recurrent_index_);

    // frames through the pre-recurrent stack
    std::vector<Array> frames(T);
    std::vector<std::vector<LayerTape>> frame_tapes(T);
    for (std::size_t s = 0; s < T; ++s) {
      Tape ft;
      Array x = input.row(s);
      for (std::size_t i = 0; i < k; ++i) x = forward_layer(i, x, ft);
      frames[s] = std::move(x);
      frame_tapes[s] = std::move(ft.layers);
    }
    // store per-frame tapes flattened; layout restored in backward
    for (auto& ft : frame_tapes)
      for (auto& lt : ft) t.layers.push_back(std::move(lt));

    Array h = forward_gru(k, frames, t);
    for (std::size_t i = k + 1; i < spec_.layers.size(); ++i)
      h = forward_layer(i, h, t);
    t.output = h;
    t.output.require_finite("forward");
    return t.output;
  }

  // Gradient of a scalar loss w.r.t. every parameter, given dL/d(output).
  // Optionally also yields dL/d(input) (same shape as the forward input).
  ParameterSet backward(const Tape& tape, const Array& upstream,
                        Array* input_grad = nullptr) const {
    if (tape.version != params_.version())
      throw StalenessError("backward: tape from parameter version " +
                           std::to_string(tape.version) + ", params now at " +
                           std::to_string(params_.version()));
    if (upstream.size() != output_dim())
      throw DimensionError("backward: upstream size " + std::to_string(upstream.size()) +
                           " != output dim " + std::to_string(output_dim()));

    ParameterSet grads = params_.zeros_like();

    if (!recurrent()) {
      Array dy = upstream;
      for (std::size_t i = spec_.layers.size(); i-- > 0;)
        dy = backward_layer(i, tape.layers[i], dy, grads);
      if (input_grad) *input_grad = dy;
      return grads;
    }

    const std::size_t k = static_cast<std::size_t>(recurrent_index_);
    const auto& gru_tape = std::get<GruTape>(tape.layers[tape.layers.size() -
                                                         (spec_.layers.size() - k)]);
    const std::size_t T = gru_tape.steps.size();
    const std::size_t tail = spec_.layers.size() - k - 1;  // layers after the cell
    const std::size_t gru_pos = tape.layers.size() - tail - 1;

    // head layers (act on final hidden state)
    Array dy = upstream;
    for (std::size_t i = spec_.layers.size(); i-- > k + 1;) {
      const LayerTape& lt = tape.layers[gru_pos + 1 + (i - k - 1)];
      dy = backward_layer(i, lt, dy, grads);
    }

    // recurrent cell
    std::vector<Array> dframes;
    backward_gru(k, gru_tape, dy, grads, dframes);

    // per-frame encoder stack
    Array dinput({T, detail::spec_input_dim(spec_.layers.front())});
    for (std::size_t s = 0; s < T; ++s) {
      Array dx = dframes[s];
      for (std::size_t i = k; i-- > 0;) {
        const LayerTape& lt = tape.layers[s * k + i];
        dx = backward_layer(i, lt, dx, grads);
      }
      for (std::size_t j = 0; j < dx.size(); ++j) dinput.at(s, j) = dx[j];
    }
    if (input_grad) *input_grad = dinput;
    return grads;
  }

 private:
  void validate_chain() {
    if (spec_.layers.empty()) throw DomainError("NetworkSpec: no layers");
    int rec_count = 0;
    for (std::size_t i = 0; i + 1 < spec_.layers.size(); ++i) {
      const std::size_t out = detail::spec_output_dim(spec_.layers[i]);
      const std::size_t in = detail::spec_input_dim(spec_.layers[i + 1]);
      if (out != in)
        throw DimensionError("NetworkSpec: layer " + std::to_string(i) + " emits " +
                             std::to_string(out) + " but layer " + std::to_string(i + 1) +
                             " expects " + std::to_string(in));
    }
    for (const auto& l : spec_.layers)
      if (std::holds_alternative<RecurrentSpec>(l)) ++rec_count;
    if (rec_count > 1) throw DomainError("NetworkSpec: at most one recurrent layer");
    locate_recurrent();
  }

  void locate_recurrent() {
    recurrent_index_ = -1;
    for (std::size_t i = 0; i < spec_.layers.size(); ++i)
      if (std::holds_alternative<RecurrentSpec>(spec_.layers[i]))
        recurrent_index_ = static_cast<int>(i);
  }

  void init_params() {
    Rng rng(spec_.seed);
    for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
      const std::string p = "layer" + std::to_string(i) + "/";
      if (auto* d = std::get_if<DenseSpec>(&spec_.layers[i])) {
        params_.add(p + "W", detail::glorot(d->out, d->in, d->in, d->out, rng));
        params_.add(p + "b", Array::zeros({d->out}));
      } else if (auto* r = std::get_if<RecurrentSpec>(&spec_.layers[i])) {
        for (const char* g : {"z", "r", "c"}) {
          params_.add(p + "W" + g, detail::glorot(r->hidden, r->in, r->in, r->hidden, rng));
          params_.add(p + "U" + g, detail::glorot(r->hidden, r->hidden, r->hidden, r->hidden, rng));
          params_.add(p + "b" + g, Array::zeros({r->hidden}));
        }
      }
      // softmax has no parameters
    }
  }

  Array forward_layer(std::size_t i, const Array& x, Tape& t) const {
    const std::string p = "layer" + std::to_string(i) + "/";
    if (auto* d = std::get_if<DenseSpec>(&spec_.layers[i])) {
      if (x.size() != d->in)
        throw DimensionError("forward: layer " + std::to_string(i) + " expects [" +
                             std::to_string(d->in) + "], got " + x.shape_string());
      const Array& W = params_.get(p + "W");
      const Array& b = params_.get(p + "b");
      DenseTape dt;
      dt.input = x;
      dt.pre = Array({d->out});
      dt.output = Array({d->out});
      for (std::size_t o = 0; o < d->out; ++o) {
        double s = b[o];
        const double* wrow = W.data() + o * d->in;
        for (std::size_t j = 0; j < d->in; ++j) s += wrow[j] * x[j];
        dt.pre[o] = s;
        dt.output[o] = apply_activation(d->act, s);
      }
      Array out = dt.output;
      t.layers.emplace_back(std::move(dt));
      return out;
    }
    if (std::holds_alternative<SoftmaxSpec>(spec_.layers[i])) {
      SoftmaxTape st;
      st.output = softmax(x);
      Array out = st.output;
      t.layers.emplace_back(std::move(st));
      return out;
    }
    throw DomainError("forward_layer: recurrent layer routed incorrectly");
  }

  Array forward_gru(std::size_t i, const std::vector<Array>& frames, Tape& t) const {
    const auto& spec = std::get<RecurrentSpec>(spec_.layers[i]);
    const std::string p = "layer" + std::to_string(i) + "/";
    const Array &Wz = params_.get(p + "Wz"), &Uz = params_.get(p + "Uz"), &bz = params_.get(p + "bz");
    const Array &Wr = params_.get(p + "Wr"), &Ur = params_.get(p + "Ur"), &br = params_.get(p + "br");
    const Array &Wc = params_.get(p + "Wc"), &Uc = params_.get(p + "Uc"), &bc = params_.get(p + "bc");
    const std::size_t H = spec.hidden, I = spec.in;

    GruTape gt;
    Array h = Array::zeros({H});
    for (const Array& x : frames) {
      if (x.size() != I)
        throw DimensionError("forward: recurrent layer " + std::to_string(i) +
                             " expects frames of [" + std::to_string(I) + "], got " +
                             x.shape_string());
      GruStepTape st;
      st.x = x;
      st.h_prev = h;
      st.z = Array({H});
      st.r = Array({H});
      st.c = Array({H});
      auto gate = [&](const Array& W, const Array& U, const Array& b, const Array& hin,
                      std::size_t o) {
        double s = b[o];
        const double* wrow = W.data() + o * I;
        for (std::size_t j = 0; j < I; ++j) s += wrow[j] * x[j];
        const double* urow = U.data() + o * H;
        for (std::size_t j = 0; j < H; ++j) s += urow[j] * hin[j];
        return s;
      };
      for (std::size_t o = 0; o < H; ++o) {
        st.z[o] = apply_activation(Activation::sigmoid, gate(Wz, Uz, bz, st.h_prev, o));
        st.r[o] = apply_activation(Activation::sigmoid, gate(Wr, Ur, br, st.h_prev, o));
      }
      Array rh({H});
      for (std::size_t o = 0; o < H; ++o) rh[o] = st.r[o] * st.h_prev[o];
      for (std::size_t o = 0; o < H; ++o)
        st.c[o] = std::tanh(gate(Wc, Uc, bc, rh, o));
      Array h_next({H});
      for (std::size_t o = 0; o < H; ++o)
        h_next[o] = (1.0 - st.z[o]) * st.h_prev[o] + st.z[o] * st.c[o];
      h = h_next;
      gt.steps.push_back(std::move(st));
    }
    gt.h_final = h;
    t.layers.emplace_back(std::move(gt));
    return h;
  }

  void backward_gru(std::size_t i, const GruTape& gt, const Array& dh_final,
                    ParameterSet& grads, std::vector<Array>& dframes) const {
    const auto& spec = std::get<RecurrentSpec>(spec_.layers[i]);
    const std::string p = "layer" + std::to_string(i) + "/";
    const Array &Uz = params_.get(p + "Uz"), &Ur = params_.get(p + "Ur"), &Uc = params_.get(p + "Uc");
    const Array &Wz = params_.get(p + "Wz"), &Wr = params_.get(p + "Wr"), &Wc = params_.get(p + "Wc");
    Array &dWz = grads.get_mut(p + "Wz"), &dUz = grads.get_mut(p + "Uz"), &dbz = grads.get_mut(p + "bz");
    Array &dWr = grads.get_mut(p + "Wr"), &dUr = grads.get_mut(p + "Ur"), &dbr = grads.get_mut(p + "br");
    Array &dWc = grads.get_mut(p + "Wc"), &dUc = grads.get_mut(p + "Uc"), &dbc = grads.get_mut(p + "bc");
    const std::size_t H = spec.hidden, I = spec.in, T = gt.steps.size();

    dframes.assign(T, Array::zeros({I}));
    Array dh = dh_final;
    for (std::size_t s = T; s-- > 0;) {
      const GruStepTape& st = gt.steps[s];
      Array dh_prev = Array::zeros({H});
      Array daz({H}), dar({H}), dac({H});
      // h = (1-z) h_prev + z c
      for (std::size_t o = 0; o < H; ++o) {
        const double dz = dh[o] * (st.c[o] - st.h_prev[o]);
        const double dc = dh[o] * st.z[o];
        dh_prev[o] += dh[o] * (1.0 - st.z[o]);
        daz[o] = dz * st.z[o] * (1.0 - st.z[o]);
        dac[o] = dc * (1.0 - st.c[o] * st.c[o]);
      }
      // candidate: c = tanh(Wc x + Uc (r*h_prev) + bc)
      Array drh = Array::zeros({H});
      for (std::size_t o = 0; o < H; ++o) {
        dbc[o] += dac[o];
        for (std::size_t j = 0; j < I; ++j) dWc.at(o, j) += dac[o] * st.x[j];
        for (std::size_t j = 0; j < H; ++j) {
          dUc.at(o, j) += dac[o] * st.r[j] * st.h_prev[j];
          drh[j] += Uc.at(o, j) * dac[o];
        }
      }
      for (std::size_t o = 0; o < H; ++o) {
        dar[o] = drh[o] * st.h_prev[o] * st.r[o] * (1.0 - st.r[o]);
        dh_prev[o] += drh[o] * st.r[o];
      }
      // gates z and r share the affine pattern
      for (std::size_t o = 0; o < H; ++o) {
        dbz[o] += daz[o];
        dbr[o] += dar[o];
        for (std::size_t j = 0; j < I; ++j) {
          dWz.at(o, j) += daz[o] * st.x[j];
          dWr.at(o, j) += dar[o] * st.x[j];
        }
        for (std::size_t j = 0; j < H; ++j) {
          dUz.at(o, j) += daz[o] * st.h_prev[j];
          dUr.at(o, j) += dar[o] * st.h_prev[j];
        }
      }
      Array& dx = dframes[s];
      for (std::size_t o = 0; o < H; ++o)
        for (std::size_t j = 0; j < I; ++j)
          dx[j] += Wz.at(o, j) * daz[o] + Wr.at(o, j) * dar[o] + Wc.at(o, j) * dac[o];
      // dh_prev contributions through the gate matrices
      for (std::size_t o = 0; o < H; ++o)
        for (std::size_t j = 0; j < H; ++j)
          dh_prev[j] += Uz.at(o, j) * daz[o] + Ur.at(o, j) * dar[o];
      dh = dh_prev;
    }
  }

  Array backward_layer(std::size_t i, const LayerTape& lt, const Array& dy,
                       ParameterSet& grads) const {
    const std::string p = "layer" + std::to_string(i) + "/";
    if (auto* d = std::get_if<DenseSpec>(&spec_.layers[i])) {
      const auto& dt = std::get<DenseTape>(lt);
      const Array& W = params_.get(p + "W");
      Array& dW = grads.get_mut(p + "W");
      Array& db = grads.get_mut(p + "b");
      Array dx = Array::zeros({d->in});
      for (std::size_t o = 0; o < d->out; ++o) {
        const double da = dy[o] * activation_grad(d->act, dt.pre[o], dt.output[o]);
        db[o] += da;
        double* dwrow = dW.data() + o * d->in;
        const double* wrow = W.data() + o * d->in;
        for (std::size_t j = 0; j < d->in; ++j) {
          dwrow[j] += da * dt.input[j];
          dx[j] += wrow[j] * da;
        }
      }
      return dx;
    }
    if (std::holds_alternative<SoftmaxSpec>(spec_.layers[i])) {
      const auto& st = std::get<SoftmaxTape>(lt);
      const Array& y = st.output;
      double inner = 0;
      for (std::size_t j = 0; j < y.size(); ++j) inner += y[j] * dy[j];
      Array dx({y.size()});
      for (std::size_t j = 0; j < y.size(); ++j) dx[j] = y[j] * (dy[j] - inner);
      return dx;
    }
    throw DomainError("backward_layer: recurrent layer routed incorrectly");
  }

 public:
  // Numerically stable softmax; output sums to 1 within 1e-12.
  static Array softmax(const Array& logits) {
    Array p({logits.size()});
    double m = logits[0];
    for (std::size_t i = 1; i < logits.size(); ++i) m = std::max(m, logits[i]);
    double sum = 0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
      p[i] = std::exp(logits[i] - m);
      sum += p[i];
    }
    for (std::size_t i = 0; i < logits.size(); ++i) p[i] /= sum;
    return p;
  }

 private:
  NetworkSpec spec_;
  ParameterSet params_;
  int recurrent_index_ = -1;
};

// Convenience builders for the network shapes used across the project.
inline NetworkSpec mlp_spec(std::size_t in, const std::vector<std::size_t>& hidden,
                            std::size_t out, Activation hidden_act, Activation out_act,
                            std::uint64_t seed) {
  NetworkSpec s;
  std::size_t prev = in;
  for (std::size_t h : hidden) {
    s.layers.push_back(DenseSpec{prev, h, hidden_act});
    prev = h;
  }
  s.layers.push_back(DenseSpec{prev, out, out_act});
  s.seed = seed;
  return s;
}

inline NetworkSpec policy_spec(std::size_t obs_dim, std::size_t hidden,
                               std::size_t actions, std::uint64_t seed) {
  NetworkSpec s = mlp_spec(obs_dim, {hidden, hidden}, actions, Activation::relu,
                           Activation::linear, seed);
  s.layers.push_back(SoftmaxSpec{actions});
  return s;
}

inline NetworkSpec critic_spec(std::size_t obs_dim, std::size_t hidden, std::uint64_t seed) {
  return mlp_spec(obs_dim, {hidden, hidden}, 1, Activation::relu, Activation::linear, seed);
}

}  // namespace spdlab
