#include "xds/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include "xds/errors.hpp"

namespace xds {

using nlohmann::json;

void PipelineConfig::validate() const {
  try {
    dp.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  if (!(tau > 0.0)) throw UsageError("tau must be positive");
  if (census.window_radius < 1) throw UsageError("census radius must be at least 1");
  if (!(census.tie_threshold >= 0.0)) throw UsageError("census tie threshold must be non-negative");
  if (parallelism < 1) throw UsageError("parallelism must be at least 1");
  if (output_dir.empty()) throw UsageError("output directory must not be empty");
}

std::string to_string(FmNormalization s) { return s == FmNormalization::PerLine ? "per_line" : "global"; }
std::string to_string(FillMode m) { return m == FillMode::Affine ? "affine" : "poisson"; }
std::string to_string(FeatureSource s) { return s == FeatureSource::Census ? "census" : "b2ft"; }

FmNormalization parse_normalization(const std::string& s) {
  if (s == "per_line") return FmNormalization::PerLine;
  if (s == "global") return FmNormalization::Global;
  throw UsageError("unknown normalization scope '" + s + "' (expected per_line or global)");
}
FillMode parse_fill_mode(const std::string& s) {
  if (s == "affine") return FillMode::Affine;
  if (s == "poisson") return FillMode::Poisson;
  throw UsageError("unknown fill mode '" + s + "' (expected affine or poisson)");
}
FeatureSource parse_feature_source(const std::string& s) {
  if (s == "census") return FeatureSource::Census;
  if (s == "b2ft") return FeatureSource::B2ft;
  throw UsageError("unknown feature source '" + s + "' (expected census or b2ft)");
}

json to_json(const PipelineConfig& c) {
  return json{{"dp",
               {{"lambda", c.dp.lambda},
                {"epsilon", c.dp.epsilon},
                {"strict_gc1_runs", c.dp.strict_gc1_runs},
                {"subpixel_refine", c.dp.subpixel_refine}}},
              {"normalization", to_string(c.normalization)},
              {"fill_mode", to_string(c.fill_mode)},
              {"tau", c.tau},
              {"feature_source", to_string(c.feature_source)},
              {"census", {{"window_radius", c.census.window_radius}, {"tie_threshold", c.census.tie_threshold}}},
              {"parallelism", c.parallelism},
              {"output_dir", c.output_dir.string()},
              {"seed", c.seed}};
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) throw ParseError("unknown config key '" + where + "." + it.key() + "'");
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParseError(std::string("config key '") + key + "' has the wrong type");
  }
}

}  // namespace

PipelineConfig config_from_json(const json& j) {
  reject_unknown(j,
                 {"dp", "normalization", "fill_mode", "tau", "feature_source", "census", "parallelism", "output_dir",
                  "seed"},
                 "config");
  PipelineConfig c;
  if (j.contains("dp")) {
    const json& d = j.at("dp");
    reject_unknown(d, {"lambda", "epsilon", "strict_gc1_runs", "subpixel_refine"}, "dp");
    read(d, "lambda", c.dp.lambda);
    read(d, "epsilon", c.dp.epsilon);
    read(d, "strict_gc1_runs", c.dp.strict_gc1_runs);
    read(d, "subpixel_refine", c.dp.subpixel_refine);
  }
  if (j.contains("census")) {
    const json& d = j.at("census");
    reject_unknown(d, {"window_radius", "tie_threshold"}, "census");
    read(d, "window_radius", c.census.window_radius);
    read(d, "tie_threshold", c.census.tie_threshold);
  }
  std::string s;
  if (j.contains("normalization")) read(j, "normalization", s), c.normalization = parse_normalization(s);
  if (j.contains("fill_mode")) read(j, "fill_mode", s), c.fill_mode = parse_fill_mode(s);
  if (j.contains("feature_source")) read(j, "feature_source", s), c.feature_source = parse_feature_source(s);
  read(j, "tau", c.tau);
  read(j, "parallelism", c.parallelism);
  read(j, "seed", c.seed);
  if (j.contains("output_dir")) read(j, "output_dir", s), c.output_dir = s;
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

void save_config(const PipelineConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_json(cfg).dump(2) << "\n";
}

void apply_env_overrides(PipelineConfig& cfg) {
  if (const char* p = std::getenv("XDS_PARALLELISM"); p && *p) {
    char* end = nullptr;
    const long v = std::strtol(p, &end, 10);
    if (*end != '\0' || v < 1 || v > 4096) throw UsageError(std::string("invalid XDS_PARALLELISM '") + p + "'");
    cfg.parallelism = int(v);
  }
  if (const char* o = std::getenv("XDS_OUT_DIR"); o && *o) cfg.output_dir = o;
}

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p, const std::string& what) {
  std::filesystem::path full = std::filesystem::path(p).is_absolute() ? std::filesystem::path(p) : base / p;
  if (!std::filesystem::exists(full)) throw IoError(what + " not found: " + full.string());
  return full;
}

}  // namespace

std::vector<DatasetEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("manifest " + path.string() + " is not valid JSON: " + e.what());
  }
  const json* list = &j;
  if (j.is_object()) {
    if (!j.contains("entries")) throw ParseError("manifest has no 'entries' array");
    list = &j.at("entries");
  }
  if (!list->is_array()) throw ParseError("manifest entries must be an array");
  const auto base = path.parent_path();
  std::vector<DatasetEntry> out;
  std::set<std::string> names;
  for (const json& e : *list) {
    reject_unknown(e, {"name", "im0", "im1", "gt", "calib", "features0", "features1", "prior", "methods"}, "entry");
    DatasetEntry d;
    auto str = [&](const char* key) -> std::optional<std::string> {
      if (!e.contains(key)) return std::nullopt;
      if (!e.at(key).is_string()) throw ParseError(std::string("manifest field '") + key + "' must be a string");
      return e.at(key).get<std::string>();
    };
    const auto name = str("name");
    if (!name || name->empty()) throw ParseError("manifest entry without a name");
    if (name->find('/') != std::string::npos || *name == "." || *name == "..")
      throw ParseError("manifest entry name '" + *name + "' is not a plain file name");
    if (!names.insert(*name).second) throw ParseError("duplicate manifest entry '" + *name + "'");
    d.name = *name;
    const auto where = "entry '" + d.name + "': ";
    const auto im0 = str("im0"), im1 = str("im1");
    if (im0.has_value() != im1.has_value()) throw ParseError(where + "im0 and im1 must be given together");
    if (im0) {
      d.left = resolve(base, *im0, where + "im0");
      d.right = resolve(base, *im1, where + "im1");
    }
    if (auto v = str("gt")) d.gt = resolve(base, *v, where + "gt");
    if (auto v = str("calib")) d.calib = resolve(base, *v, where + "calib");
    if (auto v = str("features0")) d.left_features = resolve(base, *v, where + "features0");
    if (auto v = str("features1")) d.right_features = resolve(base, *v, where + "features1");
    if (d.left_features.has_value() != d.right_features.has_value())
      throw ParseError(where + "features0 and features1 must be given together");
    if (auto v = str("prior")) d.prior = resolve(base, *v, where + "prior");
    if (e.contains("methods")) {
      if (!e.at("methods").is_object()) throw ParseError(where + "methods must be an object");
      for (auto it = e.at("methods").begin(); it != e.at("methods").end(); ++it) {
        if (!it.value().is_string()) throw ParseError(where + "method paths must be strings");
        d.methods.emplace_back(it.key(), resolve(base, it.value().get<std::string>(), where + "method " + it.key()));
      }
    }
    out.push_back(std::move(d));
  }
  return out;
}

void write_manifest(const std::vector<DatasetEntry>& entries, const std::filesystem::path& path) {
  const auto base = path.parent_path();
  auto rel = [&](const std::filesystem::path& p) { return std::filesystem::relative(p, base.empty() ? "." : base).string(); };
  json list = json::array();
  for (const auto& d : entries) {
    json e{{"name", d.name}};
    if (!d.left.empty()) e["im0"] = rel(d.left), e["im1"] = rel(d.right);
    if (d.gt) e["gt"] = rel(*d.gt);
    if (d.calib) e["calib"] = rel(*d.calib);
    if (d.left_features) e["features0"] = rel(*d.left_features), e["features1"] = rel(*d.right_features);
    if (d.prior) e["prior"] = rel(*d.prior);
    if (!d.methods.empty()) {
      json m = json::object();
      for (const auto& [k, v] : d.methods) m[k] = rel(v);
      e["methods"] = m;
    }
    list.push_back(e);
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << json{{"entries", list}}.dump(2) << "\n";
}

}  // namespace xds
