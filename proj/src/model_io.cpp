#include "psenet/model_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace psenet {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json tensor_to_json(const Tensor& t) {
  ordered_json j;
  j["shape"] = t.shape();
  std::vector<double> data(t.data(), t.data() + t.size());
  j["data"] = data;
  return j;
}

Tensor tensor_from_json(const json& j) {
  std::vector<std::size_t> shape = j.at("shape").get<std::vector<std::size_t>>();
  std::vector<double> data = j.at("data").get<std::vector<double>>();
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  if (data.size() != n) {
    throw std::invalid_argument("tensor_from_json: " +
                                std::to_string(data.size()) +
                                " values for shape " + shape_to_string(shape));
  }
  Tensor t = Tensor::uninitialized(std::move(shape));
  std::copy(data.begin(), data.end(), t.data());
  return t;
}

namespace {

ordered_json layer_to_json(const Layer& layer) {
  ordered_json j;
  if (const auto* fc = std::get_if<FcLayer>(&layer)) {
    j["kind"] = "fc";
    j["W"] = tensor_to_json(fc->W);
    j["b"] = tensor_to_json(fc->b);
  } else if (const auto* res = std::get_if<ResNetBlock>(&layer)) {
    j["kind"] = "resnet";
    j["W"] = tensor_to_json(res->W);
    j["b"] = tensor_to_json(res->b);
  } else if (const auto* ps = std::get_if<PseSharedLayer>(&layer)) {
    j["kind"] = "pse_shared";
    j["n"] = ps->n;
    j["W"] = tensor_to_json(ps->W);
    j["b"] = tensor_to_json(ps->b);
    ordered_json alphas = ordered_json::array();
    for (const Tensor& a : ps->alpha) alphas.push_back(tensor_to_json(a));
    j["alpha"] = alphas;
  } else if (const auto* pg = std::get_if<PseGeneralizedLayer>(&layer)) {
    j["kind"] = "pse_generalized";
    j["n"] = pg->n;
    ordered_json ws = ordered_json::array();
    ordered_json bs = ordered_json::array();
    ordered_json alphas = ordered_json::array();
    for (int p = 0; p <= pg->n; ++p) {
      ws.push_back(tensor_to_json(pg->W[p]));
      bs.push_back(tensor_to_json(pg->b[p]));
      alphas.push_back(tensor_to_json(pg->alpha[p]));
    }
    j["W"] = ws;
    j["b"] = bs;
    j["alpha"] = alphas;
  }
  return j;
}

Layer layer_from_json(const json& j) {
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "fc") {
    return FcLayer{tensor_from_json(j.at("W")), tensor_from_json(j.at("b"))};
  }
  if (kind == "resnet") {
    return ResNetBlock{tensor_from_json(j.at("W")),
                       tensor_from_json(j.at("b"))};
  }
  if (kind == "pse_shared") {
    PseSharedLayer layer;
    layer.n = j.at("n").get<int>();
    layer.W = tensor_from_json(j.at("W"));
    layer.b = tensor_from_json(j.at("b"));
    for (const auto& a : j.at("alpha")) {
      layer.alpha.push_back(tensor_from_json(a));
    }
    if (layer.alpha.size() != static_cast<std::size_t>(layer.n) + 1) {
      throw std::invalid_argument("pse_shared layer: expected " +
                                  std::to_string(layer.n + 1) +
                                  " alpha vectors, got " +
                                  std::to_string(layer.alpha.size()));
    }
    return layer;
  }
  if (kind == "pse_generalized") {
    PseGeneralizedLayer layer;
    layer.n = j.at("n").get<int>();
    for (const auto& w : j.at("W")) layer.W.push_back(tensor_from_json(w));
    for (const auto& b : j.at("b")) layer.b.push_back(tensor_from_json(b));
    for (const auto& a : j.at("alpha")) {
      layer.alpha.push_back(tensor_from_json(a));
    }
    std::size_t want = static_cast<std::size_t>(layer.n) + 1;
    if (layer.W.size() != want || layer.b.size() != want ||
        layer.alpha.size() != want) {
      throw std::invalid_argument(
          "pse_generalized layer: per-power lists must all have n+1 entries");
    }
    return layer;
  }
  throw std::invalid_argument("unknown layer kind '" + kind + "'");
}

}  // namespace

ordered_json model_to_json(const Model& model) {
  ordered_json j;
  j["format"] = "psenet-model";
  j["version"] = 1;
  if (const auto* net = std::get_if<Network>(&model)) {
    j["type"] = "network";
    ordered_json layers = ordered_json::array();
    for (const Layer& layer : net->layers) layers.push_back(layer_to_json(layer));
    j["layers"] = layers;
    ordered_json readout;
    readout["W"] = tensor_to_json(net->readout_W);
    readout["b"] = tensor_to_json(net->readout_b);
    j["readout"] = readout;
  } else {
    const auto& oh = std::get<OneHiddenPse>(model);
    j["type"] = "one_hidden_pse";
    j["n"] = oh.n;
    j["input_dim"] = oh.input_dim;
    j["c0"] = oh.c0.at(0);
    ordered_json branches = ordered_json::array();
    for (const OneHiddenBranch& br : oh.branches) {
      ordered_json bj;
      bj["W"] = tensor_to_json(br.W);
      bj["b"] = tensor_to_json(br.b);
      bj["alpha"] = tensor_to_json(br.alpha);
      branches.push_back(bj);
    }
    j["branches"] = branches;
  }
  return j;
}

Model model_from_json(const json& j) {
  if (j.value("format", "") != "psenet-model") {
    throw std::invalid_argument("not a model file (missing format tag)");
  }
  std::string type = j.at("type").get<std::string>();
  if (type == "network") {
    Network net;
    for (const auto& layer : j.at("layers")) {
      net.layers.push_back(layer_from_json(layer));
    }
    net.readout_W = tensor_from_json(j.at("readout").at("W"));
    net.readout_b = tensor_from_json(j.at("readout").at("b"));
    return net;
  }
  if (type == "one_hidden_pse") {
    OneHiddenPse net;
    net.n = j.at("n").get<int>();
    net.input_dim = j.at("input_dim").get<int>();
    net.c0 = Tensor::scalar(j.at("c0").get<double>());
    for (const auto& bj : j.at("branches")) {
      net.branches.push_back({tensor_from_json(bj.at("W")),
                              tensor_from_json(bj.at("b")),
                              tensor_from_json(bj.at("alpha"))});
    }
    if (net.branches.size() != static_cast<std::size_t>(net.n) + 1) {
      throw std::invalid_argument("one_hidden_pse: expected " +
                                  std::to_string(net.n + 1) + " branches");
    }
    return net;
  }
  throw std::invalid_argument("unknown model type '" + type + "'");
}

void save_model(const Model& model, const std::string& path) {
  write_text_file(path, model_to_json(model).dump(2) + "\n");
}

Model load_model(const std::string& path) {
  return model_from_json(json::parse(read_text_file(path)));
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace psenet
