#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "gaitforge/ad/array.hpp"
#include "gaitforge/ad/parallel.hpp"

namespace gf::ad {

// Reverse-mode autodiff over a statically built op list. Nodes are appended
// in construction order, which is by construction a topological order: the
// forward pass visits nodes front to back, the backward pass back to front,
// each exactly once.
//
// Shapes are declared per sample. At execution time every Input carries a
// leading batch dimension [B, ...]; Params and Consts are unbatched and
// shared across the batch. The only broadcast is bias-add (and the implicit
// sharing of Params), everything else requires exact shapes.
enum class Op {
  kInput,
  kParam,
  kConst,
  kMatMul,    // [B, n] x [n, m] -> [B, m]
  kAddBias,   // [B, ..., m] + [m]
  kAdd,
  kSub,
  kMul,
  kScale,     // x * scalar
  kAddScalar, // x + scalar
  kNeg,
  kTanh,
  kRelu,
  kExp,
  kSquare,
  kMin,       // elementwise min(a, b)
  kClamp,     // clamp(x, lo, hi), constant bounds
  kConcat,    // rank-1 samples along the last axis
  kConv1d,    // [B, C, L] * [F, C, K] (+ [F]) stride s -> [B, F, Lout]
  kFlatten,   // [B, ...] -> [B, prod]
  kRowSum,    // [B, n] -> [B, 1], 64-bit accumulation
  kMeanAll,   // [B, ...] -> [1] (unbatched), 64-bit accumulation
};

inline const char* op_name(Op op) {
  switch (op) {
    case Op::kInput: return "input";
    case Op::kParam: return "param";
    case Op::kConst: return "const";
    case Op::kMatMul: return "matmul";
    case Op::kAddBias: return "add_bias";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kScale: return "scale";
    case Op::kAddScalar: return "add_scalar";
    case Op::kNeg: return "neg";
    case Op::kTanh: return "tanh";
    case Op::kRelu: return "relu";
    case Op::kExp: return "exp";
    case Op::kSquare: return "square";
    case Op::kMin: return "min";
    case Op::kClamp: return "clamp";
    case Op::kConcat: return "concat";
    case Op::kConv1d: return "conv1d";
    case Op::kFlatten: return "flatten";
    case Op::kRowSum: return "row_sum";
    case Op::kMeanAll: return "mean_all";
  }
  return "?";
}

template <typename T>
class Tape {
 public:
  using Id = int;

  struct Node {
    Op op;
    std::vector<Id> in;
    std::vector<int> sshape;  // per-sample shape (full shape for Param/Const)
    bool batched = false;
    int stride = 1;           // conv1d
    double lo = 0, hi = 0;    // clamp
    double scalar = 0;        // scale / add_scalar
    std::string name;         // inputs and params
    Array<T> value;
    Array<T> grad;
    Array<T> scratch;         // conv1d: cached im2col
  };

  // --- construction ---------------------------------------------------

  Id input(const std::string& name, std::vector<int> per_sample_shape) {
    check(!inputs_.count(name), "duplicate input '" + name + "'");
    Node n;
    n.op = Op::kInput;
    n.sshape = std::move(per_sample_shape);
    n.batched = true;
    n.name = name;
    Id id = push(std::move(n));
    inputs_[name] = id;
    input_order_.push_back(name);
    return id;
  }

  Id param(const std::string& name, Array<T> init) {
    check(!params_.count(name), "duplicate param '" + name + "'");
    Node n;
    n.op = Op::kParam;
    n.sshape = init.shape;
    n.value = std::move(init);
    n.name = name;
    Id id = push(std::move(n));
    params_[name] = id;
    param_order_.push_back(name);
    return id;
  }

  Id constant(Array<T> value) {
    Node n;
    n.op = Op::kConst;
    n.sshape = value.shape;
    n.value = std::move(value);
    return push(std::move(n));
  }

  Id matmul(Id x, Id w) {
    const Node& nx = at(x);
    const Node& nw = at(w);
    check(nx.batched && nx.sshape.size() == 1, "matmul: lhs must be batched vec");
    check(!nw.batched && nw.sshape.size() == 2, "matmul: rhs must be 2-d param");
    check(nx.sshape[0] == nw.sshape[0],
          "matmul: inner dims " + shape_str(nx.sshape) + " vs " + shape_str(nw.sshape));
    Node n;
    n.op = Op::kMatMul;
    n.in = {x, w};
    n.sshape = {nw.sshape[1]};
    n.batched = true;
    return push(std::move(n));
  }

  Id add_bias(Id x, Id b) {
    const Node& nx = at(x);
    const Node& nb = at(b);
    check(!nb.batched && nb.sshape.size() == 1, "add_bias: bias must be 1-d param");
    check(!nx.sshape.empty() && nx.sshape.back() == nb.sshape[0],
          "add_bias: trailing dim mismatch");
    Node n;
    n.op = Op::kAddBias;
    n.in = {x, b};
    n.sshape = nx.sshape;
    n.batched = nx.batched;
    return push(std::move(n));
  }

  Id add(Id a, Id b) { return binary(Op::kAdd, a, b); }
  Id sub(Id a, Id b) { return binary(Op::kSub, a, b); }
  Id mul(Id a, Id b) { return binary(Op::kMul, a, b); }
  Id min_(Id a, Id b) { return binary(Op::kMin, a, b); }

  Id scale(Id x, double c) { return unary_scalar(Op::kScale, x, c); }
  Id add_scalar(Id x, double c) { return unary_scalar(Op::kAddScalar, x, c); }
  Id neg(Id x) { return unary(Op::kNeg, x); }
  Id tanh_(Id x) { return unary(Op::kTanh, x); }
  Id relu(Id x) { return unary(Op::kRelu, x); }
  Id exp_(Id x) { return unary(Op::kExp, x); }
  Id square(Id x) { return unary(Op::kSquare, x); }

  Id clamp(Id x, double lo, double hi) {
    Node n;
    n.op = Op::kClamp;
    n.in = {x};
    n.sshape = at(x).sshape;
    n.batched = at(x).batched;
    n.lo = lo;
    n.hi = hi;
    return push(std::move(n));
  }

  Id concat(const std::vector<Id>& xs) {
    check(!xs.empty(), "concat: empty");
    int total = 0;
    for (Id x : xs) {
      check(at(x).batched && at(x).sshape.size() == 1, "concat: rank-1 batched only");
      total += at(x).sshape[0];
    }
    Node n;
    n.op = Op::kConcat;
    n.in = xs;
    n.sshape = {total};
    n.batched = true;
    return push(std::move(n));
  }

  // x: [B, C, L]; kernel: [F, C, K]; bias: [F] or -1 for none; no padding.
  Id conv1d(Id x, Id kern, Id bias, int stride) {
    const Node& nx = at(x);
    const Node& nk = at(kern);
    check(nx.batched && nx.sshape.size() == 2, "conv1d: input must be [C, L]");
    check(!nk.batched && nk.sshape.size() == 3, "conv1d: kernel must be [F, C, K]");
    const int c = nx.sshape[0], l = nx.sshape[1];
    const int f = nk.sshape[0], k = nk.sshape[2];
    check(nk.sshape[1] == c, "conv1d: channel mismatch");
    check(stride >= 1 && k <= l, "conv1d: kernel longer than input");
    const int lout = (l - k) / stride + 1;
    check(lout >= 1, "conv1d: empty output");
    Node n;
    n.op = Op::kConv1d;
    n.in = bias >= 0 ? std::vector<Id>{x, kern, bias} : std::vector<Id>{x, kern};
    n.sshape = {f, lout};
    n.batched = true;
    n.stride = stride;
    if (bias >= 0) {
      check(!at(bias).batched && at(bias).sshape == std::vector<int>{f},
            "conv1d: bias must be [F]");
    }
    return push(std::move(n));
  }

  Id flatten(Id x) {
    Node n;
    n.op = Op::kFlatten;
    n.in = {x};
    n.sshape = {static_cast<int>(shape_size(at(x).sshape))};
    n.batched = at(x).batched;
    return push(std::move(n));
  }

  Id row_sum(Id x) {
    check(at(x).batched && at(x).sshape.size() == 1, "row_sum: rank-1 batched only");
    Node n;
    n.op = Op::kRowSum;
    n.in = {x};
    n.sshape = {1};
    n.batched = true;
    return push(std::move(n));
  }

  Id mean_all(Id x) {
    Node n;
    n.op = Op::kMeanAll;
    n.in = {x};
    n.sshape = {1};
    n.batched = false;
    return push(std::move(n));
  }

  void mark_output(const std::string& name, Id id) { outputs_[name] = id; }

  // --- execution --------------------------------------------------------

  // Runs the graph on a batch. Every declared input must be provided with
  // shape [B] + per-sample shape; all inputs must agree on B.
  std::map<std::string, Array<T>> forward(const std::map<std::string, Array<T>>& in) {
    batch_ = -1;
    for (const auto& name : input_order_) {
      auto it = in.find(name);
      check(it != in.end(), "forward: missing input '" + name + "'");
      const Array<T>& a = it->second;
      Node& n = nodes_[inputs_[name]];
      check(a.shape.size() == n.sshape.size() + 1,
            err(inputs_[name], "input rank mismatch, want [B]+" + shape_str(n.sshape) +
                                   " got " + shape_str(a.shape)));
      for (size_t i = 0; i < n.sshape.size(); ++i)
        check(a.shape[i + 1] == n.sshape[i],
              err(inputs_[name], "input shape mismatch, want [B]+" + shape_str(n.sshape) +
                                     " got " + shape_str(a.shape)));
      if (batch_ == -1) batch_ = a.shape[0];
      check(a.shape[0] == batch_, err(inputs_[name], "inconsistent batch size"));
      n.value = a;
    }
    if (batch_ == -1) batch_ = 1;  // graph with no inputs
    for (Id id = 0; id < static_cast<Id>(nodes_.size()); ++id) eval(id);
    forward_done_ = true;
    std::map<std::string, Array<T>> out;
    for (const auto& [name, id] : outputs_) out[name] = nodes_[id].value;
    return out;
  }

  // Accumulates gradients for every parameter; parameters that do not
  // influence the seeded outputs get zero gradients. Seeds are keyed by
  // output name and must match the output value shapes.
  std::map<std::string, Array<T>> backward(const std::map<std::string, Array<T>>& seeds) {
    check(forward_done_, "backward before forward");
    for (Node& n : nodes_) {
      n.grad.shape = n.value.shape;
      n.grad.data.assign(n.value.data.size(), T(0));
    }
    for (const auto& [name, g] : seeds) {
      auto it = outputs_.find(name);
      check(it != outputs_.end(), "backward: unknown output '" + name + "'");
      Node& n = nodes_[it->second];
      check(g.shape == n.value.shape,
            err(it->second, "seed shape mismatch, want " + shape_str(n.value.shape)));
      for (long i = 0; i < g.size(); ++i) n.grad.data[i] += g.data[i];
    }
    for (Id id = static_cast<Id>(nodes_.size()) - 1; id >= 0; --id) back(id);
    std::map<std::string, Array<T>> grads;
    for (const auto& [name, id] : params_) grads[name] = nodes_[id].grad;
    return grads;
  }

  // --- access -----------------------------------------------------------

  Array<T>& param_value(const std::string& name) {
    auto it = params_.find(name);
    check(it != params_.end(), "unknown param '" + name + "'");
    return nodes_[it->second].value;
  }
  const Array<T>& value(Id id) const { return nodes_[id].value; }
  const Array<T>& grad(Id id) const { return nodes_[id].grad; }
  Id input_id(const std::string& name) const { return inputs_.at(name); }
  Id output_id(const std::string& name) const { return outputs_.at(name); }
  const std::vector<std::string>& param_names() const { return param_order_; }
  const std::map<std::string, Id>& params() const { return params_; }
  int batch() const { return batch_; }

  // Copies parameter values by name (snapshot distribution to workers).
  void copy_params_from(const Tape<T>& other) {
    for (const auto& name : param_order_) {
      const Array<T>& src = const_cast<Tape<T>&>(other).param_value(name);
      Array<T>& dst = param_value(name);
      check(src.shape == dst.shape, "copy_params_from: shape mismatch for " + name);
      dst.data = src.data;
    }
  }

 private:
  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MapM = Eigen::Map<Mat>;
  using CMapM = Eigen::Map<const Mat>;

  Id push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<Id>(nodes_.size()) - 1;
  }
  Node& at(Id id) {
    check(id >= 0 && id < static_cast<Id>(nodes_.size()), "bad node id");
    return nodes_[id];
  }
  std::string err(Id id, const std::string& msg) const {
    return "node " + std::to_string(id) + " (" + op_name(nodes_[id].op) + "): " + msg;
  }

  Id binary(Op op, Id a, Id b) {
    const Node& na = at(a);
    const Node& nb = at(b);
    check(na.sshape == nb.sshape && na.batched == nb.batched,
          std::string(op_name(op)) + ": operand shape mismatch " +
              shape_str(na.sshape) + " vs " + shape_str(nb.sshape));
    Node n;
    n.op = op;
    n.in = {a, b};
    n.sshape = na.sshape;
    n.batched = na.batched;
    return push(std::move(n));
  }
  Id unary(Op op, Id x) {
    Node n;
    n.op = op;
    n.in = {x};
    n.sshape = at(x).sshape;
    n.batched = at(x).batched;
    return push(std::move(n));
  }
  Id unary_scalar(Op op, Id x, double c) {
    Id id = unary(op, x);
    nodes_[id].scalar = c;
    return id;
  }

  long rows(const Node& n) const { return n.batched ? batch_ : 1; }
  long cols(const Node& n) const { return shape_size(n.sshape); }

  void resize_value(Node& n) {
    n.value.shape = n.sshape;
    if (n.batched) n.value.shape.insert(n.value.shape.begin(), static_cast<int>(batch_));
    n.value.data.resize(rows(n) * cols(n));
  }

  void eval(Id id) {
    Node& n = nodes_[id];
    switch (n.op) {
      case Op::kInput:
      case Op::kParam:
      case Op::kConst:
        return;
      default:
        break;
    }
    Node& a = nodes_[n.in[0]];
    resize_value(n);
    const long m = rows(n) * cols(n);
    switch (n.op) {
      case Op::kMatMul: {
        Node& w = nodes_[n.in[1]];
        const long B = batch_, k = a.sshape[0], out = n.sshape[0];
        CMapM X(a.value.ptr(), B, k);
        CMapM W(w.value.ptr(), k, out);
        MapM Y(n.value.ptr(), B, out);
        parallel_for(B, 256, [&](long lo, long hi) {
          Y.middleRows(lo, hi - lo).noalias() = X.middleRows(lo, hi - lo) * W;
        });
        break;
      }
      case Op::kAddBias: {
        Node& b = nodes_[n.in[1]];
        const long nb = b.sshape[0];
        for (long i = 0; i < m; ++i) n.value.data[i] = a.value.data[i] + b.value.data[i % nb];
        break;
      }
      case Op::kAdd: {
        Node& b = nodes_[n.in[1]];
        for (long i = 0; i < m; ++i) n.value.data[i] = a.value.data[i] + b.value.data[i];
        break;
      }
      case Op::kSub: {
        Node& b = nodes_[n.in[1]];
        for (long i = 0; i < m; ++i) n.value.data[i] = a.value.data[i] - b.value.data[i];
        break;
      }
      case Op::kMul: {
        Node& b = nodes_[n.in[1]];
        for (long i = 0; i < m; ++i) n.value.data[i] = a.value.data[i] * b.value.data[i];
        break;
      }
      case Op::kMin: {
        Node& b = nodes_[n.in[1]];
        for (long i = 0; i < m; ++i) n.value.data[i] = std::min(a.value.data[i], b.value.data[i]);
        break;
      }
      case Op::kScale:
        for (long i = 0; i < m; ++i) n.value.data[i] = a.value.data[i] * static_cast<T>(n.scalar);
        break;
      case Op::kAddScalar:
        for (long i = 0; i < m; ++i) n.value.data[i] = a.value.data[i] + static_cast<T>(n.scalar);
        break;
      case Op::kNeg:
        for (long i = 0; i < m; ++i) n.value.data[i] = -a.value.data[i];
        break;
      case Op::kTanh:
        parallel_for(m, 1 << 15, [&](long lo, long hi) {
          for (long i = lo; i < hi; ++i) n.value.data[i] = std::tanh(a.value.data[i]);
        });
        break;
      case Op::kRelu:
        for (long i = 0; i < m; ++i) n.value.data[i] = a.value.data[i] > T(0) ? a.value.data[i] : T(0);
        break;
      case Op::kExp:
        for (long i = 0; i < m; ++i) n.value.data[i] = std::exp(a.value.data[i]);
        break;
      case Op::kSquare:
        for (long i = 0; i < m; ++i) n.value.data[i] = a.value.data[i] * a.value.data[i];
        break;
      case Op::kClamp:
        for (long i = 0; i < m; ++i) {
          T v = a.value.data[i];
          n.value.data[i] = v < static_cast<T>(n.lo)   ? static_cast<T>(n.lo)
                            : v > static_cast<T>(n.hi) ? static_cast<T>(n.hi)
                                                       : v;
        }
        break;
      case Op::kConcat: {
        const long B = batch_;
        const long w = cols(n);
        long off = 0;
        for (Id src : n.in) {
          Node& s = nodes_[src];
          const long sw = cols(s);
          for (long b = 0; b < B; ++b)
            std::copy(s.value.ptr() + b * sw, s.value.ptr() + (b + 1) * sw,
                      n.value.ptr() + b * w + off);
          off += sw;
        }
        break;
      }
      case Op::kConv1d:
        conv_forward(n);
        break;
      case Op::kFlatten:
        std::copy(a.value.data.begin(), a.value.data.end(), n.value.data.begin());
        break;
      case Op::kRowSum: {
        const long B = batch_, k = a.sshape[0];
        for (long b = 0; b < B; ++b) {
          double acc = 0.0;
          const T* p = a.value.ptr() + b * k;
          for (long i = 0; i < k; ++i) acc += static_cast<double>(p[i]);
          n.value.data[b] = static_cast<T>(acc);
        }
        break;
      }
      case Op::kMeanAll: {
        double acc = 0.0;
        for (const T v : a.value.data) acc += static_cast<double>(v);
        n.value.data[0] = static_cast<T>(acc / static_cast<double>(a.value.data.size()));
        break;
      }
      default:
        check(false, err(id, "not evaluable"));
    }
  }

  void back(Id id) {
    Node& n = nodes_[id];
    if (n.op == Op::kInput || n.op == Op::kParam || n.op == Op::kConst) return;
    Node& a = nodes_[n.in[0]];
    const long m = n.grad.size();
    switch (n.op) {
      case Op::kMatMul: {
        Node& w = nodes_[n.in[1]];
        const long B = batch_, k = a.sshape[0], out = n.sshape[0];
        CMapM dY(n.grad.ptr(), B, out);
        CMapM X(a.value.ptr(), B, k);
        CMapM W(w.value.ptr(), k, out);
        MapM dX(a.grad.ptr(), B, k);
        MapM dW(w.grad.ptr(), k, out);
        parallel_for(B, 256, [&](long lo, long hi) {
          dX.middleRows(lo, hi - lo).noalias() += dY.middleRows(lo, hi - lo) * W.transpose();
        });
        parallel_for(k, 64, [&](long lo, long hi) {
          dW.middleRows(lo, hi - lo).noalias() +=
              X.middleCols(lo, hi - lo).transpose() * dY;
        });
        break;
      }
      case Op::kAddBias: {
        Node& b = nodes_[n.in[1]];
        const long nb = b.sshape[0];
        for (long i = 0; i < m; ++i) a.grad.data[i] += n.grad.data[i];
        for (long j = 0; j < nb; ++j) {
          double acc = 0.0;
          for (long i = j; i < m; i += nb) acc += static_cast<double>(n.grad.data[i]);
          b.grad.data[j] += static_cast<T>(acc);
        }
        break;
      }
      case Op::kAdd: {
        Node& b = nodes_[n.in[1]];
        for (long i = 0; i < m; ++i) a.grad.data[i] += n.grad.data[i];
        for (long i = 0; i < m; ++i) b.grad.data[i] += n.grad.data[i];
        break;
      }
      case Op::kSub: {
        Node& b = nodes_[n.in[1]];
        for (long i = 0; i < m; ++i) a.grad.data[i] += n.grad.data[i];
        for (long i = 0; i < m; ++i) b.grad.data[i] -= n.grad.data[i];
        break;
      }
      case Op::kMul: {
        Node& b = nodes_[n.in[1]];
        for (long i = 0; i < m; ++i) a.grad.data[i] += n.grad.data[i] * b.value.data[i];
        for (long i = 0; i < m; ++i) b.grad.data[i] += n.grad.data[i] * a.value.data[i];
        break;
      }
      case Op::kMin: {
        // Ties route the gradient to the first operand.
        Node& b = nodes_[n.in[1]];
        for (long i = 0; i < m; ++i) {
          if (a.value.data[i] <= b.value.data[i])
            a.grad.data[i] += n.grad.data[i];
          else
            b.grad.data[i] += n.grad.data[i];
        }
        break;
      }
      case Op::kScale:
        for (long i = 0; i < m; ++i) a.grad.data[i] += n.grad.data[i] * static_cast<T>(n.scalar);
        break;
      case Op::kAddScalar:
        for (long i = 0; i < m; ++i) a.grad.data[i] += n.grad.data[i];
        break;
      case Op::kNeg:
        for (long i = 0; i < m; ++i) a.grad.data[i] -= n.grad.data[i];
        break;
      case Op::kTanh:
        for (long i = 0; i < m; ++i) {
          const T y = n.value.data[i];
          a.grad.data[i] += n.grad.data[i] * (T(1) - y * y);
        }
        break;
      case Op::kRelu:
        for (long i = 0; i < m; ++i)
          if (a.value.data[i] > T(0)) a.grad.data[i] += n.grad.data[i];
        break;
      case Op::kExp:
        for (long i = 0; i < m; ++i) a.grad.data[i] += n.grad.data[i] * n.value.data[i];
        break;
      case Op::kSquare:
        for (long i = 0; i < m; ++i) a.grad.data[i] += T(2) * n.grad.data[i] * a.value.data[i];
        break;
      case Op::kClamp:
        for (long i = 0; i < m; ++i) {
          const T v = a.value.data[i];
          if (v >= static_cast<T>(n.lo) && v <= static_cast<T>(n.hi))
            a.grad.data[i] += n.grad.data[i];
        }
        break;
      case Op::kConcat: {
        const long B = batch_;
        const long w = cols(n);
        long off = 0;
        for (Id src : n.in) {
          Node& s = nodes_[src];
          const long sw = cols(s);
          for (long b = 0; b < B; ++b)
            for (long i = 0; i < sw; ++i)
              s.grad.data[b * sw + i] += n.grad.data[b * w + off + i];
          off += sw;
        }
        break;
      }
      case Op::kConv1d:
        conv_backward(n);
        break;
      case Op::kFlatten:
        for (long i = 0; i < m; ++i) a.grad.data[i] += n.grad.data[i];
        break;
      case Op::kRowSum: {
        const long B = batch_, k = a.sshape[0];
        for (long b = 0; b < B; ++b)
          for (long i = 0; i < k; ++i) a.grad.data[b * k + i] += n.grad.data[b];
        break;
      }
      case Op::kMeanAll: {
        const T g = n.grad.data[0] / static_cast<T>(a.value.data.size());
        for (auto& v : a.grad.data) v += g;
        break;
      }
      default:
        break;
    }
  }

  // im2col layout: row (b*Lout + p), col (c*K + k). Kernel is repacked to
  // [C*K, F] so the convolution is one GEMM; the im2col matrix is kept for
  // the backward pass.
  void conv_forward(Node& n) {
    Node& x = nodes_[n.in[0]];
    Node& kern = nodes_[n.in[1]];
    const long B = batch_;
    const int C = x.sshape[0], L = x.sshape[1];
    const int F = kern.sshape[0], K = kern.sshape[2];
    const int Lout = n.sshape[1], s = n.stride;
    n.scratch.shape = {static_cast<int>(B) * Lout, C * K};
    n.scratch.data.resize(static_cast<long>(B) * Lout * C * K);
    parallel_for(B, 8, [&](long blo, long bhi) {
      for (long b = blo; b < bhi; ++b) {
        const T* xb = x.value.ptr() + b * C * L;
        for (int p = 0; p < Lout; ++p) {
          T* row = n.scratch.ptr() + (b * Lout + p) * (C * K);
          for (int c = 0; c < C; ++c)
            for (int k = 0; k < K; ++k) row[c * K + k] = xb[c * L + p * s + k];
        }
      }
    });
    // repack kernel [F, C, K] -> [C*K, F]
    Array<T> w2({C * K, F});
    for (int f = 0; f < F; ++f)
      for (int ck = 0; ck < C * K; ++ck) w2.data[ck * F + f] = kern.value.data[f * C * K + ck];
    // GEMM: [B*Lout, C*K] x [C*K, F] -> stored transposed per sample as [F, Lout]
    Array<T> y({static_cast<int>(B) * Lout, F});
    CMapM A(n.scratch.ptr(), B * Lout, C * K);
    CMapM W2(w2.ptr(), C * K, F);
    MapM Y(y.ptr(), B * Lout, F);
    parallel_for(B * Lout, 512, [&](long lo, long hi) {
      Y.middleRows(lo, hi - lo).noalias() = A.middleRows(lo, hi - lo) * W2;
    });
    const bool has_bias = n.in.size() == 3;
    const T* bias = has_bias ? nodes_[n.in[2]].value.ptr() : nullptr;
    for (long b = 0; b < B; ++b)
      for (int p = 0; p < Lout; ++p)
        for (int f = 0; f < F; ++f)
          n.value.data[(b * F + f) * Lout + p] =
              y.data[(b * Lout + p) * F + f] + (has_bias ? bias[f] : T(0));
  }

  void conv_backward(Node& n) {
    Node& x = nodes_[n.in[0]];
    Node& kern = nodes_[n.in[1]];
    const long B = batch_;
    const int C = x.sshape[0], L = x.sshape[1];
    const int F = kern.sshape[0], K = kern.sshape[2];
    const int Lout = n.sshape[1], s = n.stride;
    // dY repacked to [B*Lout, F]
    Array<T> dy({static_cast<int>(B) * Lout, F});
    for (long b = 0; b < B; ++b)
      for (int p = 0; p < Lout; ++p)
        for (int f = 0; f < F; ++f)
          dy.data[(b * Lout + p) * F + f] = n.grad.data[(b * F + f) * Lout + p];
    // bias grad
    if (n.in.size() == 3) {
      Node& bias = nodes_[n.in[2]];
      for (int f = 0; f < F; ++f) {
        double acc = 0.0;
        for (long r = 0; r < B * Lout; ++r) acc += static_cast<double>(dy.data[r * F + f]);
        bias.grad.data[f] += static_cast<T>(acc);
      }
    }
    // kernel grad: [C*K, F] = im2col^T * dY, then repack to [F, C, K]
    Array<T> dw2({C * K, F});
    CMapM A(n.scratch.ptr(), B * Lout, C * K);
    CMapM DY(dy.ptr(), B * Lout, F);
    MapM DW2(dw2.ptr(), C * K, F);
    parallel_for(C * K, 32, [&](long lo, long hi) {
      DW2.middleRows(lo, hi - lo).noalias() = A.middleCols(lo, hi - lo).transpose() * DY;
    });
    for (int f = 0; f < F; ++f)
      for (int ck = 0; ck < C * K; ++ck) kern.grad.data[f * C * K + ck] += dw2.data[ck * F + f];
    // input grad: col2im of dY * W2^T
    Array<T> w2({C * K, F});
    for (int f = 0; f < F; ++f)
      for (int ck = 0; ck < C * K; ++ck) w2.data[ck * F + f] = kern.value.data[f * C * K + ck];
    Array<T> dcol({static_cast<int>(B) * Lout, C * K});
    CMapM W2(w2.ptr(), C * K, F);
    MapM DC(dcol.ptr(), B * Lout, C * K);
    parallel_for(B * Lout, 512, [&](long lo, long hi) {
      DC.middleRows(lo, hi - lo).noalias() = DY.middleRows(lo, hi - lo) * W2.transpose();
    });
    for (long b = 0; b < B; ++b) {
      T* dxb = x.grad.ptr() + b * C * L;
      for (int p = 0; p < Lout; ++p) {
        const T* row = dcol.ptr() + (b * Lout + p) * (C * K);
        for (int c = 0; c < C; ++c)
          for (int k = 0; k < K; ++k) dxb[c * L + p * s + k] += row[c * K + k];
      }
    }
  }

  std::vector<Node> nodes_;
  std::map<std::string, Id> inputs_;
  std::map<std::string, Id> params_;
  std::map<std::string, Id> outputs_;
  std::vector<std::string> input_order_;
  std::vector<std::string> param_order_;
  long batch_ = -1;
  bool forward_done_ = false;
};

}  // namespace gf::ad
