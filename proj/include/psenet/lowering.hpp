#pragma once

#include "psenet/layers.hpp"

namespace psenet {

// Exact reduction of a network whose hidden layers all carry separate
// weights per power (the same order n everywhere) to a plain shared-weight
// power-series network of widths (n+1) * d_i.
//
// Block structure of the result, per hidden layer i with original width d_i:
//   - pre-activation block r holds W_r h_{i-1} + b_r of the original layer,
//     rebuilt from the previous layer's blocks through the mixing products
//     W_r * Diag(alpha_{i-1,c});
//   - the output coefficients are pure 0/1 selectors: power j keeps exactly
//     block j of the pre-activation.
// The first layer stacks its per-power weights against the raw input; the
// readout concatenates W_out * Diag(alpha_{L,j}) across blocks. Outputs
// agree with the source network up to floating-point associativity.
Network lower_generalized(const Network& net);

}  // namespace psenet
