#include "psenet/lowering.hpp"

#include <stdexcept>
#include <string>

namespace psenet {

Network lower_generalized(const Network& net) {
  if (net.layers.empty()) {
    throw std::invalid_argument("lower_generalized: network has no hidden layers");
  }
  std::vector<const PseGeneralizedLayer*> layers;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto* gen = std::get_if<PseGeneralizedLayer>(&net.layers[i]);
    if (gen == nullptr) {
      throw std::invalid_argument("lower_generalized: layer " + std::to_string(i + 1) +
                                  " does not carry per-power weights");
    }
    layers.push_back(gen);
  }
  const int n = layers.front()->n;
  for (std::size_t i = 1; i < layers.size(); ++i) {
    if (layers[i]->n != n) {
      throw std::invalid_argument(
          "lower_generalized: layer " + std::to_string(i + 1) + " has order " +
          std::to_string(layers[i]->n) + " but layer 1 has order " + std::to_string(n));
    }
  }
  const std::size_t P = static_cast<std::size_t>(n) + 1;

  Network out;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const PseGeneralizedLayer& src = *layers[i];
    const std::size_t d_out = src.W[0].rows();
    const std::size_t d_in = src.W[0].cols();

    PseSharedLayer wide;
    wide.n = n;
    wide.b = Tensor::zeros({P * d_out});
    for (std::size_t r = 0; r < P; ++r) {
      for (std::size_t a = 0; a < d_out; ++a) {
        wide.b.at(r * d_out + a) = src.b[r].at(a);
      }
    }
    if (i == 0) {
      // Input has no block structure: stack the per-power weights.
      wide.W = Tensor::zeros({P * d_out, d_in});
      for (std::size_t r = 0; r < P; ++r) {
        for (std::size_t a = 0; a < d_out; ++a) {
          for (std::size_t c = 0; c < d_in; ++c) {
            wide.W.at(r * d_out + a, c) = src.W[r].at(a, c);
          }
        }
      }
    } else {
      // Block (r, c) = W_r * Diag(alpha_{prev, c}).
      const PseGeneralizedLayer& prev = *layers[i - 1];
      wide.W = Tensor::zeros({P * d_out, P * d_in});
      for (std::size_t r = 0; r < P; ++r) {
        for (std::size_t c = 0; c < P; ++c) {
          for (std::size_t a = 0; a < d_out; ++a) {
            for (std::size_t bcol = 0; bcol < d_in; ++bcol) {
              wide.W.at(r * d_out + a, c * d_in + bcol) =
                  src.W[r].at(a, bcol) * prev.alpha[c].at(bcol);
            }
          }
        }
      }
    }
    // Selector coefficients: power j keeps exactly block j.
    for (std::size_t j = 0; j < P; ++j) {
      Tensor sel = Tensor::zeros({P * d_out});
      for (std::size_t a = 0; a < d_out; ++a) sel.at(j * d_out + a) = 1.0;
      wide.alpha.push_back(sel);
    }
    out.layers.emplace_back(std::move(wide));
  }

  // Readout: concatenate W_out * Diag(alpha_{last, j}) across blocks.
  const PseGeneralizedLayer& last = *layers.back();
  const std::size_t d_last = last.W[0].rows();
  const std::size_t d_y = net.readout_W.rows();
  out.readout_W = Tensor::zeros({d_y, P * d_last});
  for (std::size_t j = 0; j < P; ++j) {
    for (std::size_t r = 0; r < d_y; ++r) {
      for (std::size_t c = 0; c < d_last; ++c) {
        out.readout_W.at(r, j * d_last + c) =
            net.readout_W.at(r, c) * last.alpha[j].at(c);
      }
    }
  }
  out.readout_b = net.readout_b;
  return out;
}

}  // namespace psenet
