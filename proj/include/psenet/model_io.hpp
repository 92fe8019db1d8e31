#pragma once

#include <string>

#include <json.hpp>

#include "psenet/layers.hpp"

namespace psenet {

// JSON model format. Doubles rely on the library's shortest round-trip
// encoding and keys keep insertion order, so serialization is byte-stable
// and load(save(m)) reproduces every parameter bit.
nlohmann::ordered_json tensor_to_json(const Tensor& t);
Tensor tensor_from_json(const nlohmann::json& j);

nlohmann::ordered_json model_to_json(const Model& model);
Model model_from_json(const nlohmann::json& j);

void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

// Shared helpers for other serialized artifacts.
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace psenet
