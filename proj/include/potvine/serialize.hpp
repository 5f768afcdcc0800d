#ifndef POTVINE_SERIALIZE_HPP
#define POTVINE_SERIALIZE_HPP

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "potvine/errors.hpp"
#include "potvine/margins.hpp"
#include "potvine/rng.hpp"
#include "potvine/vine.hpp"

namespace potvine {

using Json = nlohmann::ordered_json;

inline constexpr const char* kArtifactSchemaVersion = "1.0";

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string sample_digest(const std::vector<double>& sorted_sample) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : sorted_sample) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  }
  return hex64(h);
}

// ---- marginal model <-> json (metadata only; the sample lives in a sidecar)

inline Json marginal_to_json(const MarginalModel& m) {
  return Json{{"name", m.name},
              {"threshold", m.gpd.threshold},
              {"threshold_quantile", m.gpd.threshold_quantile},
              {"shape", m.gpd.shape},
              {"scale", m.gpd.scale},
              {"se_shape", m.se_shape},
              {"se_scale", m.se_scale},
              {"n", m.sorted_sample.size()},
              {"sorted_sample_digest", sample_digest(m.sorted_sample)}};
}

inline MarginalModel marginal_from_json(const Json& j) {
  MarginalModel m;
  m.name = j.at("name").get<std::string>();
  m.gpd.threshold = j.at("threshold").get<double>();
  m.gpd.threshold_quantile = j.at("threshold_quantile").get<double>();
  m.gpd.shape = j.at("shape").get<double>();
  m.gpd.scale = j.at("scale").get<double>();
  m.se_shape = j.value("se_shape", 0.0);
  m.se_scale = j.value("se_scale", 0.0);
  return m;  // sorted_sample attached separately from the sidecar
}

// ---- pair copula / vine <-> json

inline Json pair_copula_to_json(const PairCopula& c) {
  return Json{{"family", family_name(c.family)},
              {"rotation", c.rotation},
              {"theta", c.theta}};
}

inline PairCopula pair_copula_from_json(const Json& j) {
  PairCopula c;
  c.family = family_from_name(j.at("family").get<std::string>());
  c.rotation = j.at("rotation").get<int>();
  c.theta = j.at("theta").get<double>();
  pc::validate(c);
  return c;
}

inline Json vine_to_json(const StationaryVine& v) {
  Json classes = Json::array();
  const int m = v.width();
  for (int t = 1; t < m; ++t) {
    const int n_classes = v.classes_in_tree(t);
    for (int c = 0; c < n_classes; ++c) {
      const auto& cls = v.classes[static_cast<std::size_t>(t) - 1][static_cast<std::size_t>(c)];
      Json entry = pair_copula_to_json(cls.copula);
      entry["tree"] = t;
      entry["start"] = c;
      // displacement of the conditioned pair in whole time slices
      entry["displacement"] = (c + t) / v.d;
      entry["from"] = c % v.d;
      entry["to"] = (c + t) % v.d;
      entry["loglik"] = cls.loglik;
      entry["se"] = cls.se;
      entry["n_obs"] = cls.n_obs;
      if (!cls.warning.empty()) entry["warning"] = cls.warning;
      classes.push_back(std::move(entry));
    }
  }
  return Json{{"d", v.d}, {"p", v.p}, {"cross_order", v.cross_order},
              {"classes", std::move(classes)}};
}

inline StationaryVine vine_from_json(const Json& j) {
  StationaryVine v;
  v.d = j.at("d").get<int>();
  v.p = j.at("p").get<int>();
  v.cross_order = j.at("cross_order").get<std::vector<int>>();
  const int m = v.width();
  v.classes.resize(static_cast<std::size_t>(m) - 1);
  for (int t = 1; t < m; ++t)
    v.classes[static_cast<std::size_t>(t) - 1].resize(
        static_cast<std::size_t>(v.classes_in_tree(t)));
  for (const auto& entry : j.at("classes")) {
    const int t = entry.at("tree").get<int>();
    const int c = entry.at("start").get<int>();
    if (t < 1 || t >= m || c < 0 || c >= v.classes_in_tree(t))
      throw DataError("vine_from_json: class index out of range");
    auto& cls = v.classes[static_cast<std::size_t>(t) - 1][static_cast<std::size_t>(c)];
    cls.copula = pair_copula_from_json(entry);
    cls.loglik = entry.value("loglik", 0.0);
    cls.se = entry.value("se", 0.0);
    cls.n_obs = entry.value("n_obs", std::size_t{0});
  }
  return v;
}

// ---- sample sidecar: binary column file holding each margin's sorted sample

inline void write_sample_sidecar(const std::string& path,
                                 std::span<const MarginalModel> margins) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open sidecar for writing: " + path);
  const char magic[8] = {'P', 'V', 'S', 'W', '0', '0', '0', '1'};
  out.write(magic, 8);
  const auto nvar = static_cast<std::uint32_t>(margins.size());
  out.write(reinterpret_cast<const char*>(&nvar), sizeof(nvar));
  for (const auto& m : margins) {
    const auto len = static_cast<std::uint32_t>(m.name.size());
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(m.name.data(), len);
    const auto n = static_cast<std::uint64_t>(m.sorted_sample.size());
    out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    out.write(reinterpret_cast<const char*>(m.sorted_sample.data()),
              static_cast<std::streamsize>(n * sizeof(double)));
  }
  if (!out) throw IoError("failed writing sidecar: " + path);
}

// Attach sidecar samples to the deserialized margins; digests must match.
inline void read_sample_sidecar(const std::string& path,
                                std::vector<MarginalModel>& margins,
                                std::span<const std::string> expected_digests) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open sidecar: " + path);
  char magic[8];
  in.read(magic, 8);
  if (std::memcmp(magic, "PVSW0001", 8) != 0)
    throw DataError("sidecar has wrong magic: " + path);
  std::uint32_t nvar = 0;
  in.read(reinterpret_cast<char*>(&nvar), sizeof(nvar));
  if (nvar != margins.size()) throw DataError("sidecar variable count mismatch");
  for (std::size_t i = 0; i < margins.size(); ++i) {
    std::uint32_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    std::string name(len, '\0');
    in.read(name.data(), len);
    std::uint64_t n = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof(n));
    std::vector<double> sample(n);
    in.read(reinterpret_cast<char*>(sample.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw DataError("sidecar truncated: " + path);
    if (name != margins[i].name) throw DataError("sidecar name mismatch: " + name);
    if (i < expected_digests.size() &&
        sample_digest(sample) != expected_digests[i])
      throw DataError("sidecar digest mismatch for margin " + name);
    margins[i].sorted_sample = std::move(sample);
  }
}

// ---- model artifact

struct ModelArtifact {
  std::vector<std::string> columns;
  std::uint64_t seed = 0;
  std::string config_hash;
  double noise_fraction = 0.0;
  bool normalize = false;
  std::vector<MarginalModel> marginals;
  std::vector<InformationCriteria> criteria;  // one row per candidate order
  std::vector<int> orders;                    // matching candidate orders
  int selected_order = 1;
  StationaryVine vine;
  double train_loglik = 0.0;
  std::size_t train_blocks = 0;
  std::string timestamp;  // empty unless explicitly requested
};

inline Json artifact_to_json(const ModelArtifact& a) {
  Json j;
  j["schema_version"] = kArtifactSchemaVersion;
  j["columns"] = a.columns;
  j["seed"] = a.seed;
  j["config_hash"] = a.config_hash;
  j["preprocessing"] = Json{{"noise_fraction", a.noise_fraction}, {"normalize", a.normalize}};
  Json marg = Json::array();
  for (const auto& m : a.marginals) marg.push_back(marginal_to_json(m));
  j["marginals"] = std::move(marg);
  Json crit = Json::array();
  for (std::size_t i = 0; i < a.criteria.size(); ++i) {
    const auto& ic = a.criteria[i];
    crit.push_back(Json{{"order", a.orders[i]},
                        {"loglik", ic.loglik},
                        {"nu", ic.nu},
                        {"aic", ic.aic},
                        {"bic", ic.bic},
                        {"mbicv", ic.mbicv}});
  }
  j["criteria"] = std::move(crit);
  j["selected_order"] = a.selected_order;
  j["train_loglik"] = a.train_loglik;
  j["train_blocks"] = a.train_blocks;
  j["vine"] = vine_to_json(a.vine);
  if (!a.timestamp.empty()) j["timestamp"] = a.timestamp;
  return j;
}

inline ModelArtifact artifact_from_json(const Json& j) {
  const auto version = j.at("schema_version").get<std::string>();
  const auto major = version.substr(0, version.find('.'));
  const std::string expected(kArtifactSchemaVersion);
  if (major != expected.substr(0, expected.find('.')))
    throw DataError("unsupported artifact schema version: " + version);
  ModelArtifact a;
  a.columns = j.at("columns").get<std::vector<std::string>>();
  a.seed = j.at("seed").get<std::uint64_t>();
  a.config_hash = j.value("config_hash", std::string{});
  if (j.contains("preprocessing")) {
    a.noise_fraction = j["preprocessing"].value("noise_fraction", 0.0);
    a.normalize = j["preprocessing"].value("normalize", false);
  }
  for (const auto& m : j.at("marginals")) a.marginals.push_back(marginal_from_json(m));
  for (const auto& c : j.at("criteria")) {
    InformationCriteria ic;
    ic.loglik = c.at("loglik").get<double>();
    ic.nu = c.at("nu").get<int>();
    ic.aic = c.at("aic").get<double>();
    ic.bic = c.at("bic").get<double>();
    ic.mbicv = c.at("mbicv").get<double>();
    a.criteria.push_back(ic);
    a.orders.push_back(c.at("order").get<int>());
  }
  a.selected_order = j.at("selected_order").get<int>();
  a.train_loglik = j.value("train_loglik", 0.0);
  a.train_blocks = j.value("train_blocks", std::size_t{0});
  a.vine = vine_from_json(j.at("vine"));
  a.timestamp = j.value("timestamp", std::string{});
  return a;
}

inline void save_artifact(const std::string& dir, const ModelArtifact& a) {
  std::ofstream out(dir + "/model.json");
  if (!out) throw IoError("cannot write artifact: " + dir + "/model.json");
  out << artifact_to_json(a).dump(2) << '\n';
  write_sample_sidecar(dir + "/model_samples.bin", a.marginals);
}

inline ModelArtifact load_artifact(const std::string& dir) {
  std::ifstream in(dir + "/model.json");
  if (!in) throw IoError("cannot open artifact: " + dir + "/model.json");
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw DataError(std::string("artifact parse error: ") + e.what());
  }
  ModelArtifact a = artifact_from_json(j);
  std::vector<std::string> digests;
  for (const auto& m : j.at("marginals"))
    digests.push_back(m.at("sorted_sample_digest").get<std::string>());
  read_sample_sidecar(dir + "/model_samples.bin", a.marginals, digests);
  return a;
}

}  // namespace potvine

#endif  // POTVINE_SERIALIZE_HPP
