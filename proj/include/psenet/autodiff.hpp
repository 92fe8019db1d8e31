#pragma once

#include "psenet/tape.hpp"

namespace psenet {

// d(output)/d(input) per sample, computed by backward from the batch sum.
// Rows of `output` must depend only on the matching row of `x_node` (true
// for every forward pass in this library), which makes the batch-sum trick
// exact. The result is a node on the same tape, so losses built from it
// remain differentiable with respect to parameters.
int input_derivative(Tape& tape, int output, int x_node);

}  // namespace psenet
