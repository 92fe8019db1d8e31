#include "psenet/autodiff.hpp"

namespace psenet {

int input_derivative(Tape& tape, int output, int x_node) {
  int total = tape.sum(output);
  std::vector<int> adj = tape.backward(total, {x_node});
  if (adj[x_node] < 0) {
    // The output does not depend on x at all; the derivative is zero.
    return tape.leaf(Tensor::zeros(tape.value(x_node).shape()));
  }
  return adj[x_node];
}

}  // namespace psenet
