#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "wsn/error.hpp"
#include "wsn/nn/train.hpp"

namespace wsn::nn {

namespace {

constexpr const char* kMagic = "wsn-cnn-model";
constexpr int kFormatVersion = 1;

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double parse_hex(const std::string& token) {
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end != token.c_str() + token.size()) throw IoError("nn", "bad number in model file: " + token);
  return v;
}

}  // namespace

void save_model(std::ostream& out, const ModelConfig& config, const ModelParams<double>& params) {
  out << kMagic << ' ' << kFormatVersion << '\n';
  out << "preset " << config.name() << '\n';
  out << "seed " << params.seed << '\n';
  const auto tensors = params.tensors();
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    out << "tensor " << ModelParams<double>::tensor_names[t] << ' ' << tensors[t].size() << '\n';
    for (std::size_t i = 0; i < tensors[t].size(); ++i) out << (i ? " " : "") << hex(tensors[t][i]);
    out << '\n';
  }
  out << "end\n";
  if (!out) throw IoError("nn", "model write failure");
}

void save_model(const std::filesystem::path& path, const ModelConfig& config, const ModelParams<double>& params) {
  std::ofstream out(path);
  if (!out) throw IoError("nn", "cannot open " + path.string() + " for writing");
  save_model(out, config, params);
}

LoadedModel load_model(std::istream& in, const ModelConfig* expected) {
  std::string magic, key, preset;
  int version = 0;
  if (!(in >> magic >> version) || magic != kMagic) throw IoError("nn", "not a model file");
  if (version != kFormatVersion)
    throw VersionError("nn", "unsupported model format version " + std::to_string(version));
  if (!(in >> key >> preset) || key != "preset") throw IoError("nn", "model file lacks preset");

  LoadedModel m;
  try {
    m.config = ModelConfig::parse(preset);
  } catch (const std::invalid_argument&) {
    throw VersionError("nn", "unknown preset " + preset + " in model file");
  }
  if (expected && expected->name() != m.config.name())
    throw VersionError("nn", "model file holds " + m.config.name() + " but " + expected->name() + " was requested");

  m.params = ModelParams<double>::zeros(m.config);
  if (!(in >> key >> m.params.seed) || key != "seed") throw IoError("nn", "model file lacks seed");
  auto tensors = m.params.tensors();
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    std::string name;
    std::size_t count = 0;
    if (!(in >> key >> name >> count) || key != "tensor" || name != ModelParams<double>::tensor_names[t])
      throw IoError("nn", "model file: expected tensor " + std::string(ModelParams<double>::tensor_names[t]));
    if (count != tensors[t].size())
      throw VersionError("nn", "tensor " + name + " has " + std::to_string(count) + " values, preset " +
                                   m.config.name() + " needs " + std::to_string(tensors[t].size()));
    std::string token;
    for (std::size_t i = 0; i < count; ++i) {
      if (!(in >> token)) throw IoError("nn", "model file truncated in " + name);
      tensors[t][i] = parse_hex(token);
    }
  }
  if (!(in >> key) || key != "end") throw IoError("nn", "model file missing end marker");
  return m;
}

LoadedModel load_model(const std::filesystem::path& path, const ModelConfig* expected) {
  std::ifstream in(path);
  if (!in) throw IoError("nn", "cannot open " + path.string());
  return load_model(in, expected);
}

}  // namespace wsn::nn
