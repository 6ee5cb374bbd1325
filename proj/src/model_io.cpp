#include "gods/model_io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace gods {

using Json = nlohmann::ordered_json;

std::string ModelFile::variant_name() const {
  if (is_kods()) return "kods";
  return to_string(std::get<TrainedPrimalModel>(model).hyper.variant);
}

Index ModelFile::feature_dim() const {
  return std::visit(
      [](const auto& m) -> Index {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, KodsModel>)
          return m.feature_dim();
        else
          return m.feature_dim;
      },
      model);
}

double ModelFile::eta_effective() const {
  return std::visit([](const auto& m) { return m.eta_effective; }, model);
}

void ModelFile::set_eta_effective(double eta) {
  if (!(eta > 0)) throw Error(ErrorCode::Domain, "eta_effective must be > 0");
  std::visit([eta](auto& m) { m.eta_effective = eta; }, model);
}

ScorePair model_scores(const ModelFile& file, const Vector& x) {
  if (const auto* k = std::get_if<KodsModel>(&file.model)) return kods_scores(*k, x);
  return primal_scores(std::get<TrainedPrimalModel>(file.model), x);
}

std::string data_hash(const Matrix& X) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](std::uint64_t bits) {
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  feed(static_cast<std::uint64_t>(X.rows()));
  feed(static_cast<std::uint64_t>(X.cols()));
  for (Index i = 0; i < X.rows(); ++i)
    for (Index j = 0; j < X.cols(); ++j) feed(std::bit_cast<std::uint64_t>(X(i, j)));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

[[noreturn]] void schema_error(const std::string& what) {
  throw Error(ErrorCode::Schema, "model file: " + what);
}

Json matrix_json(const Matrix& m) {
  Json data = Json::array();
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Json vector_json(const Vector& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) schema_error(std::string("missing field '") + key + "'");
  return j.at(key);
}

double number(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_number()) schema_error(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

template <typename Int>
Int integer(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_number_integer()) schema_error(std::string("field '") + key + "' must be an integer");
  return v.get<Int>();
}

bool boolean(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_boolean()) schema_error(std::string("field '") + key + "' must be a boolean");
  return v.get<bool>();
}

std::string text(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_string()) schema_error(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

Matrix matrix_from(const Json& j, const char* key) {
  const Json& m = field(j, key);
  const auto rows = integer<Index>(m, "rows");
  const auto cols = integer<Index>(m, "cols");
  const Json& data = field(m, "data");
  if (rows < 0 || cols < 0 || !data.is_array() ||
      data.size() != static_cast<std::size_t>(rows * cols))
    schema_error(std::string("matrix '") + key + "' has inconsistent shape");
  Matrix out(rows, cols);
  std::size_t n = 0;
  for (Index i = 0; i < rows; ++i)
    for (Index c = 0; c < cols; ++c) {
      const Json& v = data[n++];
      if (!v.is_number()) schema_error(std::string("matrix '") + key + "' has a non-numeric entry");
      out(i, c) = v.get<double>();
    }
  return out;
}

Vector vector_from(const Json& j, const char* key) {
  const Json& a = field(j, key);
  if (!a.is_array()) schema_error(std::string("field '") + key + "' must be an array");
  Vector out(static_cast<Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number()) schema_error(std::string("vector '") + key + "' has a non-numeric entry");
    out(static_cast<Index>(i)) = a[i].get<double>();
  }
  return out;
}

Json kernel_json(const KernelSpec& k) {
  return Json{{"family", to_string(k.family)},
              {"sigma", k.sigma},
              {"degree", k.degree},
              {"offset", k.offset}};
}

KernelSpec kernel_from(const Json& j) {
  KernelSpec k;
  try {
    k.family = kernel_family_from_string(text(j, "family"));
  } catch (const Error& e) {
    schema_error(e.what());
  }
  k.sigma = number(j, "sigma");
  k.degree = integer<int>(j, "degree");
  k.offset = number(j, "offset");
  try {
    k.validate();
  } catch (const Error& e) {
    schema_error(e.what());
  }
  return k;
}

CalibrationStatus calibration_status_from(const std::string& s) {
  if (s == "ok") return CalibrationStatus::Ok;
  if (s == "degenerate") return CalibrationStatus::Degenerate;
  if (s == "clamped") return CalibrationStatus::Clamped;
  schema_error("unknown calibration status '" + s + "'");
}

/// Non-finite centroids (degenerate clustering) are stored as null.
Json maybe_number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

double maybe_number_from(const Json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!j.is_number()) schema_error("calibration centroid must be a number or null");
  return j.get<double>();
}

}  // namespace

std::string to_json_text(const ModelFile& file) {
  Json doc;
  doc["schema"] = kModelSchema;
  doc["version"] = kModelSchemaVersion;
  doc["variant"] = file.variant_name();
  if (const auto* k = std::get_if<KodsModel>(&file.model)) {
    doc["normalize"] = k->normalization;
    doc["eta_effective"] = k->eta_effective;
    doc["hyper"] = Json{{"k", k->hyper.k},
                        {"eta", k->hyper.eta},
                        {"lambda", k->hyper.lambda},
                        {"relative_jitter", k->hyper.relative_jitter}};
    doc["kernel"] = kernel_json(k->kernel);
    doc["jitter"] = k->jitter;
    doc["duals"] = Json{{"y", matrix_json(k->duals.y)}, {"z", matrix_json(k->duals.z)}};
    doc["b1"] = vector_json(k->b1);
    doc["b2"] = vector_json(k->b2);
    doc["support"] = matrix_json(k->support);
  } else {
    const auto& p = std::get<TrainedPrimalModel>(file.model);
    doc["normalize"] = p.normalization;
    doc["eta_effective"] = p.eta_effective;
    doc["feature_dim"] = p.feature_dim;
    doc["hyper"] = Json{{"k", p.hyper.k},
                        {"eta", p.hyper.eta},
                        {"nu", p.hyper.nu},
                        {"lambda", p.hyper.lambda},
                        {"p_norm", p.hyper.p_norm}};
    Json frames{{"w1", matrix_json(p.frames.w1)},
                {"w2", matrix_json(p.frames.w2)},
                {"b1", vector_json(p.frames.b1)},
                {"b2", vector_json(p.frames.b2)}};
    if (p.frames.scaled()) {
      frames["r1"] = vector_json(p.frames.r1);
      frames["r2"] = vector_json(p.frames.r2);
    }
    doc["frames"] = std::move(frames);
  }
  doc["fingerprint"] = Json{{"seed", file.fingerprint.seed}, {"data_hash", file.fingerprint.data_hash}};
  if (file.calibration) {
    const Calibration& c = *file.calibration;
    doc["calibration"] = Json{{"eta_prime", c.eta_prime},
                              {"delta", c.delta},
                              {"centroids_l", {maybe_number(c.centroid_l[0]), maybe_number(c.centroid_l[1])}},
                              {"centroids_u", {maybe_number(c.centroid_u[0]), maybe_number(c.centroid_u[1])}},
                              {"status", to_string(c.status)}};
  }
  return doc.dump(2) + "\n";
}

ModelFile from_json_text(const std::string& text_in) {
  Json doc;
  try {
    doc = Json::parse(text_in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("model file: invalid JSON: ") + e.what());
  }
  if (text(doc, "schema") != kModelSchema) schema_error("not a gods model document");
  const int version = integer<int>(doc, "version");
  if (version != kModelSchemaVersion)
    schema_error("unsupported version " + std::to_string(version));

  ModelFile file;
  const std::string variant = text(doc, "variant");
  const Json& hyper = field(doc, "hyper");
  if (variant == "kods") {
    KodsModel k;
    k.hyper.k = integer<int>(hyper, "k");
    k.hyper.eta = number(hyper, "eta");
    k.hyper.lambda = number(hyper, "lambda");
    k.hyper.relative_jitter = number(hyper, "relative_jitter");
    k.normalization = k.hyper.normalize = boolean(doc, "normalize");
    k.eta_effective = number(doc, "eta_effective");
    k.kernel = kernel_from(field(doc, "kernel"));
    k.jitter = number(doc, "jitter");
    const Json& duals = field(doc, "duals");
    k.duals.y = matrix_from(duals, "y");
    k.duals.z = matrix_from(duals, "z");
    k.b1 = vector_from(doc, "b1");
    k.b2 = vector_from(doc, "b2");
    k.support = matrix_from(doc, "support");
    const Index kk = k.hyper.k, n = k.support.rows();
    if (n < 1 || k.duals.y.rows() != kk || k.duals.y.cols() != n || k.duals.z.rows() != kk ||
        k.duals.z.cols() != n || k.b1.size() != kk || k.b2.size() != kk)
      schema_error("kods shapes are inconsistent");
    file.model = std::move(k);
  } else {
    TrainedPrimalModel p;
    try {
      p.hyper.variant = variant_from_string(variant);
    } catch (const Error& e) {
      schema_error(e.what());
    }
    p.hyper.k = integer<int>(hyper, "k");
    p.hyper.eta = number(hyper, "eta");
    p.hyper.nu = number(hyper, "nu");
    p.hyper.lambda = number(hyper, "lambda");
    p.hyper.p_norm = number(hyper, "p_norm");
    p.normalization = p.hyper.normalize = boolean(doc, "normalize");
    p.eta_effective = number(doc, "eta_effective");
    p.feature_dim = integer<Index>(doc, "feature_dim");
    const Json& frames = field(doc, "frames");
    p.frames.w1 = matrix_from(frames, "w1");
    p.frames.w2 = matrix_from(frames, "w2");
    p.frames.b1 = vector_from(frames, "b1");
    p.frames.b2 = vector_from(frames, "b2");
    if (p.hyper.variant == Variant::GodsN) {
      p.frames.r1 = vector_from(frames, "r1");
      p.frames.r2 = vector_from(frames, "r2");
    }
    const Index kk = p.hyper.k, d = p.feature_dim;
    if (p.frames.w1.rows() != d || p.frames.w1.cols() != kk || p.frames.w2.rows() != d ||
        p.frames.w2.cols() != kk || p.frames.b1.size() != kk || p.frames.b2.size() != kk ||
        (p.frames.scaled() && (p.frames.r1.size() != kk || p.frames.r2.size() != kk)))
      schema_error("frame shapes are inconsistent");
    file.model = std::move(p);
  }
  if (!(file.eta_effective() > 0)) schema_error("eta_effective must be > 0");

  const Json& fp = field(doc, "fingerprint");
  file.fingerprint.seed = integer<std::uint64_t>(fp, "seed");
  file.fingerprint.data_hash = text(fp, "data_hash");
  if (doc.contains("calibration")) {
    const Json& c = doc["calibration"];
    Calibration cal{};
    cal.eta_prime = number(c, "eta_prime");
    cal.delta = number(c, "delta");
    const Json& cl = field(c, "centroids_l");
    const Json& cu = field(c, "centroids_u");
    if (!cl.is_array() || cl.size() != 2 || !cu.is_array() || cu.size() != 2)
      schema_error("calibration centroids must be pairs");
    for (int i = 0; i < 2; ++i) {
      cal.centroid_l[i] = maybe_number_from(cl[static_cast<std::size_t>(i)]);
      cal.centroid_u[i] = maybe_number_from(cu[static_cast<std::size_t>(i)]);
    }
    cal.status = calibration_status_from(text(c, "status"));
    file.calibration = cal;
  }
  return file;
}

void save_model(const std::string& path, const ModelFile& file) {
  const std::string doc = to_json_text(file);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
  out << doc;
  if (!out) throw Error(ErrorCode::Io, "write failure on '" + path + "'");
}

ModelFile load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

}  // namespace gods
