#pragma once

#include <array>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "psenet/tensor.hpp"

namespace psenet {

enum class Op : std::uint8_t {
  kLeaf,
  kAdd,
  kSub,
  kHadamard,
  kScale,
  kSum,
  kMatMul,    // A(m,k) * B(k,n)
  kMatMulNT,  // A(m,k) * B(n,k)^T
  kMatMulTN,  // A(k,m)^T * B(k,n)
  kLinear,    // X(N,din) * W(dout,din)^T + b(dout)
  kRowScale,  // A(N,d) * diag-per-column v(d)
  kRowAdd,    // A(N,d) + v(d) broadcast over rows
  kColSum,    // A(N,d) -> v(d)
  kRowBroadcast,   // v(d) -> (N,d)
  kBroadcastFull,  // scalar -> arbitrary shape
  kReshape,
  kReluPow,
  kHeaviside,
};

// Recycles value buffers between tape resets so long training loops do not
// hit the allocator for every node.
class BufferPool {
 public:
  std::shared_ptr<double[]> acquire(std::size_t n);
  void release(std::shared_ptr<double[]> storage, std::size_t n);

 private:
  std::unordered_map<std::size_t, std::vector<std::shared_ptr<double[]>>> free_;
};

// Append-only computation graph for reverse-mode differentiation. Node ids
// are indices into the node list; inputs always reference earlier nodes, so
// the list is topologically ordered by construction. backward() itself
// appends ordinary nodes for the adjoint computation, which makes gradients
// differentiable in turn (needed when a loss involves an input derivative).
class Tape {
 public:
  int leaf(Tensor value);

  int add(int a, int b);
  int sub(int a, int b);
  int hadamard(int a, int b);
  int scale(int a, double c);
  int sum(int a);
  int mean(int a);
  int matmul(int a, int b);
  int matmul_nt(int a, int b);
  int matmul_tn(int a, int b);
  int linear(int x, int w, int b);
  int row_scale(int a, int v);
  int row_add(int a, int v);
  int col_sum(int a);
  int row_broadcast(int v, std::size_t n_rows);
  int broadcast_full(int s, std::vector<std::size_t> shape);
  int reshape(int a, std::vector<std::size_t> shape);
  int relu_pow(int a, int k);
  int heaviside(int a);

  const Tensor& value(int id) const { return nodes_[check_id(id)].value; }
  double scalar_value(int id) const;
  // False only when a relu_pow result overflowed to +/-inf (or NaN).
  bool finite(int id) const { return nodes_[check_id(id)].finite; }
  std::size_t node_count() const { return nodes_.size(); }

  // Drops all nodes, recycling value buffers that nothing else references.
  void reset();

  // Adjoints of `root` (a scalar node) with respect to every node it
  // reaches; entry -1 marks nodes that do not influence root. When
  // `targets` is non-empty, propagation is pruned to nodes that feed some
  // target, which skips adjoint work for parameters that are not wanted.
  // Adjoints are themselves tape nodes, so a second backward pass can
  // differentiate through them.
  std::vector<int> backward(int root, const std::vector<int>& targets = {});

 private:
  struct Node {
    Op op;
    std::array<int, 3> in{-1, -1, -1};
    int k = 0;      // relu_pow exponent
    double c = 0.0; // scale factor
    Tensor value;
    bool finite = true;
  };

  int check_id(int id) const;
  int push(Node node);
  Tensor alloc(std::vector<std::size_t> shape);
  void accumulate(std::vector<int>& adj, const std::vector<char>& leads,
                  int node, int contribution);

  std::vector<Node> nodes_;
  BufferPool pool_;
};

}  // namespace psenet
