#include "skyprobe/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "skyprobe/errors.hpp"

namespace skyprobe {
namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cols;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    cols.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cols;
}

}  // namespace

std::string_view to_string(ClassLabel c) noexcept { return c == ClassLabel::Skype ? "Skype" : "Normal"; }

std::optional<ClassLabel> parse_label(std::string_view text) noexcept {
  text = trim(text);
  if (iequals(text, "skype")) return ClassLabel::Skype;
  if (iequals(text, "normal")) return ClassLabel::Normal;
  return std::nullopt;
}

std::size_t LabeledDataset::count(ClassLabel label) const noexcept {
  return static_cast<std::size_t>(
      std::count_if(instances_.begin(), instances_.end(), [&](const Instance& i) { return i.label == label; }));
}

void LabeledDataset::require_trainable() const {
  if (instances_.empty()) throw DatasetEmpty("dataset has no instances");
  if (count(ClassLabel::Skype) == 0 || count(ClassLabel::Normal) == 0)
    throw SingleClass("dataset contains a single class");
}

LabeledDataset load_dataset(std::string_view csv) {
  LabeledDataset ds;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    std::size_t eol = csv.find('\n', pos);
    if (eol == std::string_view::npos) eol = csv.size();
    std::string_view line = csv.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) {
      if (eol == csv.size()) break;
      continue;
    }
    if (!header_seen) {
      if (trim(line) != kFeatureCsvHeader)
        throw SchemaMismatch("unexpected header '" + std::string(line) + "'");
      header_seen = true;
      continue;
    }
    const auto cols = split_commas(line);
    if (cols.size() != kFeatureCount + 1)
      throw RowParseError(line_no, "expected " + std::to_string(kFeatureCount + 1) + " columns, got " +
                                       std::to_string(cols.size()));
    std::array<double, kFeatureCount> values{};
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
      const std::string_view c = cols[i];
      auto [end, ec] = std::from_chars(c.data(), c.data() + c.size(), values[i]);
      if (ec != std::errc{} || end != c.data() + c.size() || !std::isfinite(values[i]))
        throw RowParseError(line_no, "bad number '" + std::string(c) + "' in column " +
                                         std::string(kFeatureNames[i]));
    }
    const auto label = parse_label(cols[kFeatureCount]);
    if (!label) throw RowParseError(line_no, "unknown label '" + std::string(cols[kFeatureCount]) + "'");
    ds.add(FeatureVector::from_values(values), *label);
    if (eol == csv.size()) break;
  }
  if (!header_seen) throw SchemaMismatch("missing header");
  return ds;
}

LabeledDataset load_dataset_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_dataset(ss.str());
}

std::string to_csv(const LabeledDataset& ds) {
  std::string out(kFeatureCsvHeader);
  out += '\n';
  for (const auto& inst : ds.instances()) {
    out += format_feature_row(inst.features, to_string(inst.label));
    out += '\n';
  }
  return out;
}

void save_dataset_file(const std::string& path, const LabeledDataset& ds) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write dataset '" + path + "'");
  out << to_csv(ds);
}

Split stratified_split(const LabeledDataset& ds, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("train_fraction must lie in (0, 1)");
  if (ds.empty()) throw DatasetEmpty("cannot split an empty dataset");

  std::mt19937_64 rng(seed);
  std::vector<bool> in_train(ds.size(), false);
  for (ClassLabel c : {ClassLabel::Skype, ClassLabel::Normal}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < ds.size(); ++i)
      if (ds[i].label == c) idx.push_back(i);
    if (idx.empty()) continue;
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n = static_cast<long>(idx.size());
    long take = std::lround(static_cast<double>(n) * train_fraction);
    if (n >= 2) take = std::clamp(take, 1L, n - 1);
    for (long k = 0; k < take; ++k) in_train[idx[static_cast<std::size_t>(k)]] = true;
  }
  Split s;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    (in_train[i] ? s.train : s.test).add(ds[i].features, ds[i].label);
  }
  return s;
}

}  // namespace skyprobe
