#include "skyprobe/bundle.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "skyprobe/errors.hpp"

namespace skyprobe {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

fs::path member_path(const std::string& dir, ModelKind k) {
  return fs::path(dir) / (std::string(to_string(k)) + ".json");
}

}  // namespace

std::string threshold_to_json(const ThresholdConfig& t) {
  json j{{"format", "skyprobe-threshold"}, {"version", 1}, {"auc_th", t.auc_th}, {"r_th", t.r_th}};
  return j.dump(1) + "\n";
}

ThresholdConfig threshold_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    if (j.at("format") != "skyprobe-threshold") throw ModelFormatError("not a threshold file");
    ThresholdConfig t{j.at("auc_th").get<double>(), j.at("r_th").get<double>()};
    if (!(t.auc_th >= 0 && t.auc_th <= 1) || !(t.r_th >= 0 && t.r_th <= 10))
      throw ModelFormatError("threshold out of range");
    return t;
  } catch (const json::exception& e) {
    throw ModelFormatError(std::string("threshold file: ") + e.what());
  }
}

void save_model_dir(const std::string& dir, const ModelBundle& bundle) {
  fs::create_directories(dir);
  for (const auto& m : bundle.models) save_model_file(member_path(dir, kind_of(m)).string(), m, bundle.meta);
  std::ofstream out(fs::path(dir) / "threshold.json", std::ios::binary | std::ios::trunc);
  out << threshold_to_json(bundle.threshold);
  if (!out) throw std::runtime_error("cannot write threshold file in '" + dir + "'");
}

ModelBundle load_model_dir(const std::string& dir) {
  ModelBundle b;
  const ModelKind kinds[] = {ModelKind::Tree, ModelKind::Logistic, ModelKind::BayesNet};
  for (std::size_t i = 0; i < 3; ++i) {
    const fs::path p = member_path(dir, kinds[i]);
    if (!fs::exists(p)) throw ModelFormatError("missing model file " + p.string());
    b.models[i] = load_model_file(p.string(), i == 0 ? &b.meta : nullptr);
    if (kind_of(b.models[i]) != kinds[i]) throw ModelFormatError(p.string() + " holds the wrong model kind");
  }
  const fs::path tp = fs::path(dir) / "threshold.json";
  if (fs::exists(tp)) {
    std::ifstream in(tp, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    b.threshold = threshold_from_json(ss.str());
  }
  return b;
}

}  // namespace skyprobe
