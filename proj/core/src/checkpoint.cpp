#include "orars/checkpoint.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "format_util.hpp"
#include "orars/error.hpp"

namespace orars {

namespace {

constexpr std::string_view kMagic = "orars-checkpoint";

class Reader {
 public:
  Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  std::string word(std::string_view expect_key = {}) {
    std::string w;
    if (!(in_ >> w)) corrupt("unexpected end of file");
    if (!expect_key.empty() && w != expect_key) {
      corrupt("expected '" + std::string(expect_key) + "', found '" + w + "'");
    }
    return w;
  }

  template <typename T>
  T value(std::string_view key) {
    word(key);
    T v{};
    if (!(in_ >> v)) corrupt("bad value for '" + std::string(key) + "'");
    return v;
  }

  double real() {
    const std::string w = word();
    char* end = nullptr;
    const double v = std::strtod(w.c_str(), &end);
    if (end != w.c_str() + w.size() || !std::isfinite(v)) corrupt("bad real '" + w + "'");
    return v;
  }

  [[noreturn]] void corrupt(const std::string& why) const {
    throw ParseError("corrupt checkpoint " + source_ + ": " + why);
  }

 private:
  std::istream& in_;
  std::string source_;
};

}  // namespace

ModelKind parse_model_kind(std::string_view name) {
  if (name == "pairwise_classifier") return ModelKind::pairwise_classifier;
  if (name == "regressor") return ModelKind::regressor;
  throw ConfigError("unknown model kind '" + std::string(name) + "'");
}

std::string_view to_string(ModelKind kind) {
  return kind == ModelKind::pairwise_classifier ? "pairwise_classifier" : "regressor";
}

void save_model(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::string out;
  out += std::string(kMagic) + " " + std::to_string(kCheckpointFormatVersion) + "\n";
  out += "kind " + std::string(to_string(ckpt.kind)) + "\n";
  out += "agop_mode " + std::string(to_string(ckpt.agop_mode)) + "\n";
  const auto& c = ckpt.config;
  out += "seed " + std::to_string(c.seed) + "\n";
  out += "learning_rate " + detail::real_to_string(c.learning_rate) + "\n";
  out += "epochs " + std::to_string(c.epochs) + "\n";
  out += "batch_size " + std::to_string(c.batch_size) + "\n";
  out += "validation_fraction " + detail::real_to_string(c.validation_fraction) + "\n";
  out += "pairs_per_epoch " + std::to_string(c.pairs_per_epoch) + "\n";
  const auto& layers = ckpt.model.layers();
  out += "layers " + std::to_string(layers.size()) + "\n";
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    out += "layer " + std::to_string(l) + " " + std::to_string(layer.input_dim()) + " " +
           std::to_string(layer.output_dim()) + " " + std::string(to_string(layer.activation)) +
           "\nweights";
    for (const double v : layer.weights.data()) {
      out += ' ';
      detail::append_real(out, v);
    }
    out += "\nbias";
    for (const double v : layer.bias) {
      out += ' ';
      detail::append_real(out, v);
    }
    out += '\n';
  }
  out += "end\n";

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open checkpoint for writing: " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed: " + path.string());
}

Checkpoint load_model(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open checkpoint: " + path.string());
  Reader r(f, path.string());

  if (r.word() != kMagic) r.corrupt("missing '" + std::string(kMagic) + "' header");
  std::string version;
  if (!(f >> version)) r.corrupt("missing format version");
  if (version != std::to_string(kCheckpointFormatVersion)) {
    throw VersionError("checkpoint " + path.string() + " has format version " + version +
                       ", expected " + std::to_string(kCheckpointFormatVersion));
  }

  Checkpoint ckpt;
  try {
    ckpt.kind = parse_model_kind(r.value<std::string>("kind"));
    ckpt.agop_mode = parse_agop_mode(r.value<std::string>("agop_mode"));
  } catch (const ConfigError& e) {
    r.corrupt(e.what());
  }
  auto& c = ckpt.config;
  c.seed = r.value<std::uint64_t>("seed");
  r.word("learning_rate");
  c.learning_rate = r.real();
  c.epochs = r.value<std::size_t>("epochs");
  c.batch_size = r.value<std::size_t>("batch_size");
  r.word("validation_fraction");
  c.validation_fraction = r.real();
  c.pairs_per_epoch = r.value<std::size_t>("pairs_per_epoch");

  const auto n_layers = r.value<std::size_t>("layers");
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l < n_layers; ++l) {
    if (r.value<std::size_t>("layer") != l) r.corrupt("layer index out of order");
    std::size_t n_in = 0;
    std::size_t n_out = 0;
    std::string act;
    if (!(f >> n_in >> n_out >> act)) r.corrupt("bad layer header");
    DenseLayer layer;
    try {
      layer.activation = parse_activation(act);
    } catch (const ConfigError& e) {
      r.corrupt(e.what());
    }
    layer.weights = Matrix(n_in, n_out);
    layer.bias.resize(n_out);
    r.word("weights");
    for (double& v : layer.weights.data()) v = r.real();
    r.word("bias");
    for (double& v : layer.bias) v = r.real();
    layers.push_back(std::move(layer));
  }
  r.word("end");
  try {
    ckpt.model = MlpModel(std::move(layers));
  } catch (const ShapeError& e) {
    r.corrupt(e.what());
  }
  return ckpt;
}

}  // namespace orars
