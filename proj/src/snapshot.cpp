#include "evonet/snapshot.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "evonet/errors.hpp"

namespace evonet {

using nlohmann::json;

namespace {

json matrix_to_json(const Matrix& M) {
  json out = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j) out.push_back(M(i, j));
  return out;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Matrix matrix_from_json(const json& j, std::size_t rows, std::size_t cols) {
  if (!j.is_array() || j.size() != rows * cols) throw ShapeError("snapshot matrix has wrong size");
  Matrix M(rows, cols);
  std::size_t k = 0;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t c = 0; c < cols; ++c)
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = j[k++].get<double>();
  return M;
}

Vector vector_from_json(const json& j, std::size_t size) {
  if (!j.is_array() || j.size() != size) throw ShapeError("snapshot vector has wrong size");
  Vector v(size);
  for (std::size_t i = 0; i < size; ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

}  // namespace

std::string to_snapshot(const EvolvingNetwork& net) {
  json doc;
  doc["format"] = "evonet-network";
  doc["version"] = 1;
  doc["mode"] = std::string(to_string(net.mode()));
  doc["input_dim"] = net.input_dim();
  doc["output_dim"] = net.output_dim();
  json layers = json::array();
  for (const auto& layer : net.layers()) {
    layers.push_back({{"inputs", layer.input_width()},
                      {"width", layer.width()},
                      {"eta", layer.eta},
                      {"W", matrix_to_json(layer.W)},
                      {"b", vector_to_json(layer.b)}});
  }
  doc["layers"] = std::move(layers);
  doc["head"] = {{"inputs", net.top_width()},
                 {"outputs", net.output_dim()},
                 {"eta", net.head().eta},
                 {"W", matrix_to_json(net.head().W)},
                 {"c", vector_to_json(net.head().c)}};
  return doc.dump(1);
}

EvolvingNetwork from_snapshot(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParameterError(std::string("snapshot is not valid JSON: ") + e.what());
  }
  if (doc.value("format", "") != "evonet-network" || doc.value("version", 0) != 1)
    throw ParameterError("unsupported snapshot format");
  try {
    const Mode mode = parse_mode(doc.at("mode").get<std::string>());
    std::vector<HiddenLayer> layers;
    for (const auto& jl : doc.at("layers")) {
      const auto in = jl.at("inputs").get<std::size_t>();
      const auto width = jl.at("width").get<std::size_t>();
      layers.push_back(HiddenLayer{matrix_from_json(jl.at("W"), in, width),
                                   vector_from_json(jl.at("b"), width), jl.at("eta").get<double>()});
    }
    const auto& jh = doc.at("head");
    const auto in = jh.at("inputs").get<std::size_t>();
    const auto out = jh.at("outputs").get<std::size_t>();
    OutputLayer head{matrix_from_json(jh.at("W"), in, out), vector_from_json(jh.at("c"), out),
                     jh.at("eta").get<double>()};
    EvolvingNetwork net(mode, std::move(layers), std::move(head));
    if (net.input_dim() != doc.at("input_dim").get<std::size_t>() ||
        net.output_dim() != doc.at("output_dim").get<std::size_t>())
      throw ShapeError("snapshot dimensions disagree with its layers");
    return net;
  } catch (const json::exception& e) {
    throw ParameterError(std::string("malformed snapshot: ") + e.what());
  }
}

void save_snapshot(const EvolvingNetwork& net, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParameterError("cannot write snapshot to " + path.string());
  out << to_snapshot(net) << '\n';
}

EvolvingNetwork load_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot read snapshot " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_snapshot(buffer.str());
}

}  // namespace evonet
