#include "metalearn/variant.hpp"

#include <algorithm>
#include <cctype>

#include "common/error.hpp"

namespace pamela {

VariantTraits traits(Algorithm algorithm) {
  VariantTraits t;
  switch (algorithm) {
    case Algorithm::Maml:
      break;
    case Algorithm::FoMaml:
      t.style = MetaGradientStyle::FirstOrder;
      break;
    case Algorithm::Reptile:
      t.style = MetaGradientStyle::Reptile;
      break;
    case Algorithm::MetaSgd:
      t.q_trainable = true;
      t.single_step = true;
      break;
    case Algorithm::Pamela:
      t.q_trainable = true;
      t.uses_skips = true;
      t.p_trainable = true;
      break;
    case Algorithm::MamlQSharedMulti:
      t.q_trainable = true;
      t.q_shared = true;
      break;
    case Algorithm::MamlQ:
      t.q_trainable = true;
      break;
    case Algorithm::MamlP:
      t.uses_skips = true;
      t.p_trainable = true;
      break;
  }
  return t;
}

std::string_view to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::Maml: return "maml";
    case Algorithm::FoMaml: return "fomaml";
    case Algorithm::Reptile: return "reptile";
    case Algorithm::MetaSgd: return "metasgd";
    case Algorithm::Pamela: return "pamela";
    case Algorithm::MamlQSharedMulti: return "maml+q_shared_multi";
    case Algorithm::MamlQ: return "maml+q";
    case Algorithm::MamlP: return "maml+p";
  }
  return "?";
}

std::vector<Algorithm> all_algorithms() {
  return {Algorithm::Maml,   Algorithm::FoMaml,           Algorithm::Reptile, Algorithm::MetaSgd,
          Algorithm::Pamela, Algorithm::MamlQSharedMulti, Algorithm::MamlQ,   Algorithm::MamlP};
}

namespace {
std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}
}  // namespace

Algorithm parse_algorithm(std::string_view name) {
  const std::string key = lower(name);
  for (auto a : all_algorithms())
    if (key == to_string(a)) return a;
  if (key == "meta-sgd") return Algorithm::MetaSgd;
  throw ValueError("unknown algorithm '" + std::string(name) + "'");
}

std::string_view to_string(QGranularity granularity) {
  return granularity == QGranularity::PerParameter ? "parameter" : "tensor";
}

QGranularity parse_granularity(std::string_view name) {
  const std::string key = lower(name);
  if (key == "parameter") return QGranularity::PerParameter;
  if (key == "tensor") return QGranularity::PerTensor;
  throw ValueError("unknown Q granularity '" + std::string(name) + "' (expected 'parameter' or 'tensor')");
}

}  // namespace pamela
