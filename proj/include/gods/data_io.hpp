#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gods/common.hpp"

namespace gods {

struct Dataset {
  Matrix features;                  ///< n x d
  std::vector<std::string> labels;  ///< empty, or one per row
  std::string source;
  bool normalized = false;

  Index rows() const { return features.rows(); }
  Index dim() const { return features.cols(); }
  bool has_labels() const { return !labels.empty(); }
};

struct CsvOptions {
  char delimiter = ',';
  bool header = false;
  /// Column holding the label: a 0-based index (negative counts from the end)
  /// or a header name. Unset means every column is a feature.
  std::optional<std::variant<int, std::string>> label_column;
};

Dataset load_csv(const std::string& path, const CsvOptions& options = {});
/// Features written with shortest round-trip formatting, label last.
void write_csv(const std::string& path, const Dataset& ds, char delimiter = ',');

struct Normalized {
  Matrix features;
  Index zero_rows = 0;
};

/// Unit-normalizes every nonzero row; zero rows are left untouched and counted.
Normalized l2_normalize(const Matrix& X);

struct Split {
  Dataset train;  ///< floor(ratio * n_pos) target rows
  Dataset test;   ///< remaining target rows followed by every other row
};

/// One-class protocol split. Positive rows are shuffled with the seeded
/// generator (Fisher-Yates) before the cut.
Split one_class_split(const Dataset& ds, const std::string& target, double ratio,
                      std::uint64_t seed);

enum class SynthKind { Gaussian, Arbitrary, Ring, Ring3d };

struct SynthParams {
  SynthKind kind = SynthKind::Gaussian;
  Index n = 100;
  Index d = 2;         ///< gaussian only
  Vector mean;         ///< gaussian; empty means zero
  Matrix cov;          ///< gaussian; empty means identity
  double r_in = 0.7;   ///< ring, ring3d
  double r_out = 1.0;  ///< ring, ring3d
  double half_height = 0.15;  ///< ring3d: z ~ U(-h, h)
};

SynthKind synth_kind_from_string(const std::string& s);

/// Seeded synthetic distributions.
///   gaussian   mean + L z, L L^T = cov
///   arbitrary  x ~ U(0, 2], y = sqrt(x) * (x + sign(randn) * rand)
///   ring       angle ~ U[0, 2pi), radius ~ U[r_in, r_out]
///   ring3d     ring in the xy-plane with z ~ U(-half_height, half_height)
Dataset synth(const SynthParams& params, std::uint64_t seed);

}  // namespace gods
