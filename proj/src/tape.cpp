#include "psenet/tape.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

namespace psenet {

namespace {

[[noreturn]] void shape_error(const std::string& op, const Tensor& a,
                              const Tensor& b) {
  throw std::invalid_argument(op + ": incompatible shapes " + a.shape_string() +
                              " and " + b.shape_string());
}

[[noreturn]] void shape_error(const std::string& op, const Tensor& a) {
  throw std::invalid_argument(op + ": bad operand shape " + a.shape_string());
}

}  // namespace

std::shared_ptr<double[]> BufferPool::acquire(std::size_t n) {
  auto it = free_.find(n);
  if (it != free_.end() && !it->second.empty()) {
    auto storage = std::move(it->second.back());
    it->second.pop_back();
    return storage;
  }
  return std::shared_ptr<double[]>(new double[std::max<std::size_t>(n, 1)]);
}

void BufferPool::release(std::shared_ptr<double[]> storage, std::size_t n) {
  free_[n].push_back(std::move(storage));
}

int Tape::check_id(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) {
    throw std::out_of_range("tape node id " + std::to_string(id));
  }
  return id;
}

int Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return static_cast<int>(nodes_.size()) - 1;
}

Tensor Tape::alloc(std::vector<std::size_t> shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return Tensor::from_storage(std::move(shape), pool_.acquire(n));
}

void Tape::reset() {
  for (Node& node : nodes_) {
    if (node.value.defined() && node.value.storage().use_count() == 1) {
      std::size_t n = node.value.size();
      pool_.release(node.value.storage(), n);
    }
    node.value = Tensor();
  }
  nodes_.clear();
}

double Tape::scalar_value(int id) const {
  const Tensor& v = value(id);
  if (v.size() != 1) {
    throw std::logic_error("scalar_value on node of shape " + v.shape_string());
  }
  return v.data()[0];
}

int Tape::leaf(Tensor value) {
  Node n;
  n.op = Op::kLeaf;
  n.value = std::move(value);
  return push(n);
}

int Tape::add(int a, int b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  if (!va.same_shape(vb)) shape_error("add", va, vb);
  Node n;
  n.op = Op::kAdd;
  n.in = {a, b, -1};
  n.value = alloc(va.shape());
  const double* pa = va.data();
  const double* pb = vb.data();
  double* out = n.value.data();
  for (std::size_t i = 0; i < va.size(); ++i) out[i] = pa[i] + pb[i];
  return push(std::move(n));
}

int Tape::sub(int a, int b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  if (!va.same_shape(vb)) shape_error("sub", va, vb);
  Node n;
  n.op = Op::kSub;
  n.in = {a, b, -1};
  n.value = alloc(va.shape());
  const double* pa = va.data();
  const double* pb = vb.data();
  double* out = n.value.data();
  for (std::size_t i = 0; i < va.size(); ++i) out[i] = pa[i] - pb[i];
  return push(std::move(n));
}

int Tape::hadamard(int a, int b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  if (!va.same_shape(vb)) shape_error("hadamard", va, vb);
  Node n;
  n.op = Op::kHadamard;
  n.in = {a, b, -1};
  n.value = alloc(va.shape());
  const double* pa = va.data();
  const double* pb = vb.data();
  double* out = n.value.data();
  for (std::size_t i = 0; i < va.size(); ++i) out[i] = pa[i] * pb[i];
  return push(std::move(n));
}

int Tape::scale(int a, double c) {
  const Tensor& va = value(a);
  Node n;
  n.op = Op::kScale;
  n.in = {a, -1, -1};
  n.c = c;
  n.value = alloc(va.shape());
  const double* pa = va.data();
  double* out = n.value.data();
  for (std::size_t i = 0; i < va.size(); ++i) out[i] = pa[i] * c;
  return push(std::move(n));
}

int Tape::sum(int a) {
  const Tensor& va = value(a);
  Node n;
  n.op = Op::kSum;
  n.in = {a, -1, -1};
  n.value = alloc({1});
  const double* pa = va.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) acc += pa[i];
  n.value.data()[0] = acc;
  return push(std::move(n));
}

int Tape::mean(int a) {
  std::size_t n_elems = value(a).size();
  return scale(sum(a), 1.0 / static_cast<double>(n_elems));
}

int Tape::matmul(int a, int b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  if (va.rank() != 2 || vb.rank() != 2 || va.cols() != vb.rows()) {
    shape_error("matmul", va, vb);
  }
  std::size_t m = va.rows(), k = va.cols(), p = vb.cols();
  Node n;
  n.op = Op::kMatMul;
  n.in = {a, b, -1};
  n.value = alloc({m, p});
  const double* pa = va.data();
  const double* pb = vb.data();
  double* out = n.value.data();
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out + i * p;
    for (std::size_t j = 0; j < p; ++j) row[j] = 0.0;
    for (std::size_t t = 0; t < k; ++t) {
      double av = pa[i * k + t];
      const double* brow = pb + t * p;
      for (std::size_t j = 0; j < p; ++j) row[j] += av * brow[j];
    }
  }
  return push(std::move(n));
}

int Tape::matmul_nt(int a, int b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  if (va.rank() != 2 || vb.rank() != 2 || va.cols() != vb.cols()) {
    shape_error("matmul_nt", va, vb);
  }
  std::size_t m = va.rows(), k = va.cols(), p = vb.rows();
  Node n;
  n.op = Op::kMatMulNT;
  n.in = {a, b, -1};
  n.value = alloc({m, p});
  const double* pa = va.data();
  const double* pb = vb.data();
  double* out = n.value.data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = pa + i * k;
    for (std::size_t j = 0; j < p; ++j) {
      const double* brow = pb + j * k;
      double acc = 0.0;
      for (std::size_t t = 0; t < k; ++t) acc += arow[t] * brow[t];
      out[i * p + j] = acc;
    }
  }
  return push(std::move(n));
}

int Tape::matmul_tn(int a, int b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  if (va.rank() != 2 || vb.rank() != 2 || va.rows() != vb.rows()) {
    shape_error("matmul_tn", va, vb);
  }
  std::size_t k = va.rows(), m = va.cols(), p = vb.cols();
  Node n;
  n.op = Op::kMatMulTN;
  n.in = {a, b, -1};
  n.value = alloc({m, p});
  const double* pa = va.data();
  const double* pb = vb.data();
  double* out = n.value.data();
  std::memset(out, 0, m * p * sizeof(double));
  for (std::size_t t = 0; t < k; ++t) {
    const double* arow = pa + t * m;
    const double* brow = pb + t * p;
    for (std::size_t i = 0; i < m; ++i) {
      double av = arow[i];
      double* orow = out + i * p;
      for (std::size_t j = 0; j < p; ++j) orow[j] += av * brow[j];
    }
  }
  return push(std::move(n));
}

int Tape::linear(int x, int w, int b) {
  const Tensor& vx = value(x);
  const Tensor& vw = value(w);
  const Tensor& vb = value(b);
  if (vx.rank() != 2 || vw.rank() != 2 || vx.cols() != vw.cols()) {
    shape_error("linear", vx, vw);
  }
  if (vb.rank() != 1 || vb.size() != vw.rows()) shape_error("linear", vw, vb);
  std::size_t n_rows = vx.rows(), din = vx.cols(), dout = vw.rows();
  Node n;
  n.op = Op::kLinear;
  n.in = {x, w, b};
  n.value = alloc({n_rows, dout});
  const double* px = vx.data();
  const double* pw = vw.data();
  const double* pb = vb.data();
  double* out = n.value.data();
  for (std::size_t i = 0; i < n_rows; ++i) {
    const double* xrow = px + i * din;
    double* orow = out + i * dout;
    for (std::size_t o = 0; o < dout; ++o) {
      const double* wrow = pw + o * din;
      double acc = pb[o];
      for (std::size_t t = 0; t < din; ++t) acc += xrow[t] * wrow[t];
      orow[o] = acc;
    }
  }
  return push(std::move(n));
}

int Tape::row_scale(int a, int v) {
  const Tensor& va = value(a);
  const Tensor& vv = value(v);
  if (va.rank() != 2 || vv.rank() != 1 || va.cols() != vv.size()) {
    shape_error("row_scale", va, vv);
  }
  std::size_t n_rows = va.rows(), d = va.cols();
  Node n;
  n.op = Op::kRowScale;
  n.in = {a, v, -1};
  n.value = alloc(va.shape());
  const double* pa = va.data();
  const double* pv = vv.data();
  double* out = n.value.data();
  for (std::size_t i = 0; i < n_rows; ++i) {
    const double* arow = pa + i * d;
    double* orow = out + i * d;
    for (std::size_t j = 0; j < d; ++j) orow[j] = arow[j] * pv[j];
  }
  return push(std::move(n));
}

int Tape::row_add(int a, int v) {
  const Tensor& va = value(a);
  const Tensor& vv = value(v);
  if (va.rank() != 2 || vv.rank() != 1 || va.cols() != vv.size()) {
    shape_error("row_add", va, vv);
  }
  std::size_t n_rows = va.rows(), d = va.cols();
  Node n;
  n.op = Op::kRowAdd;
  n.in = {a, v, -1};
  n.value = alloc(va.shape());
  const double* pa = va.data();
  const double* pv = vv.data();
  double* out = n.value.data();
  for (std::size_t i = 0; i < n_rows; ++i) {
    const double* arow = pa + i * d;
    double* orow = out + i * d;
    for (std::size_t j = 0; j < d; ++j) orow[j] = arow[j] + pv[j];
  }
  return push(std::move(n));
}

int Tape::col_sum(int a) {
  const Tensor& va = value(a);
  if (va.rank() != 2) shape_error("col_sum", va);
  std::size_t n_rows = va.rows(), d = va.cols();
  Node n;
  n.op = Op::kColSum;
  n.in = {a, -1, -1};
  n.value = alloc({d});
  const double* pa = va.data();
  double* out = n.value.data();
  std::memset(out, 0, d * sizeof(double));
  for (std::size_t i = 0; i < n_rows; ++i) {
    const double* arow = pa + i * d;
    for (std::size_t j = 0; j < d; ++j) out[j] += arow[j];
  }
  return push(std::move(n));
}

int Tape::row_broadcast(int v, std::size_t n_rows) {
  const Tensor& vv = value(v);
  if (vv.rank() != 1) shape_error("row_broadcast", vv);
  std::size_t d = vv.size();
  Node n;
  n.op = Op::kRowBroadcast;
  n.in = {v, -1, -1};
  n.value = alloc({n_rows, d});
  const double* pv = vv.data();
  double* out = n.value.data();
  for (std::size_t i = 0; i < n_rows; ++i) {
    std::memcpy(out + i * d, pv, d * sizeof(double));
  }
  return push(std::move(n));
}

int Tape::broadcast_full(int s, std::vector<std::size_t> shape) {
  const Tensor& vs = value(s);
  if (vs.size() != 1) shape_error("broadcast_full", vs);
  Node n;
  n.op = Op::kBroadcastFull;
  n.in = {s, -1, -1};
  n.value = alloc(std::move(shape));
  double v = vs.data()[0];
  double* out = n.value.data();
  for (std::size_t i = 0; i < n.value.size(); ++i) out[i] = v;
  return push(std::move(n));
}

int Tape::reshape(int a, std::vector<std::size_t> shape) {
  const Tensor& va = value(a);
  std::size_t n_elems = 1;
  for (std::size_t d : shape) n_elems *= d;
  if (n_elems != va.size()) {
    throw std::invalid_argument("reshape: " + va.shape_string() + " to " +
                                shape_to_string(shape) + " changes size");
  }
  Node n;
  n.op = Op::kReshape;
  n.in = {a, -1, -1};
  n.value = Tensor::from_storage(std::move(shape), va.storage());
  return push(std::move(n));
}

int Tape::relu_pow(int a, int k) {
  if (k < 0) throw std::invalid_argument("relu_pow: negative exponent");
  const Tensor& va = value(a);
  Node n;
  n.op = Op::kReluPow;
  n.in = {a, -1, -1};
  n.k = k;
  if (k == 0) {
    // sigma^0 is the identity; share the input's storage.
    n.value = Tensor::from_storage(va.shape(), va.storage());
    return push(std::move(n));
  }
  n.value = alloc(va.shape());
  const double* pa = va.data();
  double* out = n.value.data();
  bool finite = true;
  if (k == 1) {
    for (std::size_t i = 0; i < va.size(); ++i) {
      out[i] = pa[i] > 0.0 ? pa[i] : 0.0;
    }
  } else {
    for (std::size_t i = 0; i < va.size(); ++i) {
      double r = pa[i] > 0.0 ? pa[i] : 0.0;
      double y = ipow(r, k);
      out[i] = y;
      finite = finite && std::isfinite(y);
    }
  }
  if (k == 1) {
    for (std::size_t i = 0; i < va.size(); ++i) {
      finite = finite && std::isfinite(out[i]);
    }
  }
  n.finite = finite;
  return push(std::move(n));
}

int Tape::heaviside(int a) {
  const Tensor& va = value(a);
  Node n;
  n.op = Op::kHeaviside;
  n.in = {a, -1, -1};
  n.value = alloc(va.shape());
  const double* pa = va.data();
  double* out = n.value.data();
  for (std::size_t i = 0; i < va.size(); ++i) out[i] = pa[i] > 0.0 ? 1.0 : 0.0;
  return push(std::move(n));
}

void Tape::accumulate(std::vector<int>& adj, const std::vector<char>& leads,
                      int node, int contribution) {
  if (!leads[node]) return;
  if (adj[node] < 0) {
    adj[node] = contribution;
  } else {
    adj[node] = add(adj[node], contribution);
  }
}

std::vector<int> Tape::backward(int root, const std::vector<int>& targets) {
  check_id(root);
  if (value(root).size() != 1) {
    throw std::invalid_argument("backward: root node has shape " +
                                value(root).shape_string() +
                                ", expected a scalar");
  }
  const int n = static_cast<int>(nodes_.size());
  // leads[i]: node i transitively feeds some target (everything counts when
  // no targets are named). A single ascending pass works because inputs
  // always precede their consumers.
  std::vector<char> leads(n, targets.empty() ? 1 : 0);
  if (!targets.empty()) {
    for (int t : targets) leads[check_id(t)] = 1;
    for (int id = 0; id < n; ++id) {
      if (leads[id]) continue;
      for (int p : nodes_[id].in) {
        if (p >= 0 && leads[p]) {
          leads[id] = 1;
          break;
        }
      }
    }
  }

  std::vector<int> adj(n, -1);
  if (leads[root]) {
    adj[root] = leaf(Tensor::scalar(1.0));
  }
  for (int id = root; id >= 0; --id) {
    if (adj[id] < 0) continue;
    const int g = adj[id];
    // Copy the small node header: appending contribution nodes may
    // reallocate nodes_.
    const Op op = nodes_[id].op;
    const std::array<int, 3> in = nodes_[id].in;
    const int k = nodes_[id].k;
    const double c = nodes_[id].c;
    switch (op) {
      case Op::kLeaf:
        break;
      case Op::kAdd:
        accumulate(adj, leads, in[0], g);
        accumulate(adj, leads, in[1], g);
        break;
      case Op::kSub:
        accumulate(adj, leads, in[0], g);
        if (leads[in[1]]) accumulate(adj, leads, in[1], scale(g, -1.0));
        break;
      case Op::kHadamard:
        if (leads[in[0]]) accumulate(adj, leads, in[0], hadamard(g, in[1]));
        if (leads[in[1]]) accumulate(adj, leads, in[1], hadamard(g, in[0]));
        break;
      case Op::kScale:
        if (leads[in[0]]) accumulate(adj, leads, in[0], scale(g, c));
        break;
      case Op::kSum:
        if (leads[in[0]]) {
          accumulate(adj, leads, in[0],
                     broadcast_full(g, value(in[0]).shape()));
        }
        break;
      case Op::kMatMul:
        if (leads[in[0]]) accumulate(adj, leads, in[0], matmul_nt(g, in[1]));
        if (leads[in[1]]) accumulate(adj, leads, in[1], matmul_tn(in[0], g));
        break;
      case Op::kMatMulNT:
        if (leads[in[0]]) accumulate(adj, leads, in[0], matmul(g, in[1]));
        if (leads[in[1]]) accumulate(adj, leads, in[1], matmul_tn(g, in[0]));
        break;
      case Op::kMatMulTN:
        if (leads[in[0]]) accumulate(adj, leads, in[0], matmul_nt(in[1], g));
        if (leads[in[1]]) accumulate(adj, leads, in[1], matmul(in[0], g));
        break;
      case Op::kLinear:
        if (leads[in[0]]) accumulate(adj, leads, in[0], matmul(g, in[1]));
        if (leads[in[1]]) accumulate(adj, leads, in[1], matmul_tn(g, in[0]));
        if (leads[in[2]]) accumulate(adj, leads, in[2], col_sum(g));
        break;
      case Op::kRowScale:
        if (leads[in[0]]) accumulate(adj, leads, in[0], row_scale(g, in[1]));
        if (leads[in[1]]) {
          accumulate(adj, leads, in[1], col_sum(hadamard(g, in[0])));
        }
        break;
      case Op::kRowAdd:
        accumulate(adj, leads, in[0], g);
        if (leads[in[1]]) accumulate(adj, leads, in[1], col_sum(g));
        break;
      case Op::kColSum:
        if (leads[in[0]]) {
          accumulate(adj, leads, in[0],
                     row_broadcast(g, value(in[0]).rows()));
        }
        break;
      case Op::kRowBroadcast:
        if (leads[in[0]]) accumulate(adj, leads, in[0], col_sum(g));
        break;
      case Op::kBroadcastFull:
        if (leads[in[0]]) accumulate(adj, leads, in[0], sum(g));
        break;
      case Op::kReshape:
        if (leads[in[0]]) {
          accumulate(adj, leads, in[0], reshape(g, value(in[0]).shape()));
        }
        break;
      case Op::kReluPow:
        if (!leads[in[0]]) break;
        if (k == 0) {
          accumulate(adj, leads, in[0], g);
        } else if (k == 1) {
          accumulate(adj, leads, in[0], hadamard(g, heaviside(in[0])));
        } else {
          int deriv = scale(relu_pow(in[0], k - 1), static_cast<double>(k));
          accumulate(adj, leads, in[0], hadamard(g, deriv));
        }
        break;
      case Op::kHeaviside:
        // Zero almost everywhere; no contribution.
        break;
    }
  }
  return adj;
}

}  // namespace psenet
