#pragma once

// Versioned JSON model files. Matrices are stored row-major as
// {"rows", "cols", "data"}; doubles are written in shortest round-trip form,
// so save -> load reproduces every parameter bit for bit.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "gods/inference.hpp"
#include "gods/kods.hpp"
#include "gods/primal.hpp"

namespace gods {

inline constexpr const char* kModelSchema = "gods-model";
inline constexpr int kModelSchemaVersion = 1;

struct Fingerprint {
  std::uint64_t seed = 0;
  std::string data_hash;  ///< fnv1a64 of the training features, hex

  friend bool operator==(const Fingerprint&, const Fingerprint&) = default;
};

struct ModelFile {
  std::variant<TrainedPrimalModel, KodsModel> model;
  Fingerprint fingerprint;
  std::optional<Calibration> calibration;  ///< set by the calibrate command

  bool is_kods() const { return std::holds_alternative<KodsModel>(model); }
  /// "bods", "gods", "gods_n", "gods_o", "gods_e" or "kods".
  std::string variant_name() const;
  Index feature_dim() const;
  double eta_effective() const;
  void set_eta_effective(double eta);
};

ScorePair model_scores(const ModelFile& file, const Vector& x);

/// FNV-1a 64 over the row-major IEEE-754 bytes of X (little-endian), as 16 hex digits.
std::string data_hash(const Matrix& X);

std::string to_json_text(const ModelFile& file);
/// Throws ErrorCode::Schema for malformed or mismatched documents.
ModelFile from_json_text(const std::string& text);

void save_model(const std::string& path, const ModelFile& file);
ModelFile load_model(const std::string& path);

}  // namespace gods
