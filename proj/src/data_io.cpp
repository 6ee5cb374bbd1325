#include "gods/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>

#include "gods/random.hpp"

namespace gods {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(delim, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

Dataset load_csv(const std::string& path, const CsvOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");

  std::vector<std::string> lines;
  std::vector<std::size_t> line_numbers;
  std::string line;
  for (std::size_t no = 1; std::getline(in, line); ++no) {
    if (trim(line).empty()) continue;
    lines.push_back(line);
    line_numbers.push_back(no);
  }
  if (in.bad()) throw Error(ErrorCode::Io, "read failure on '" + path + "'");

  std::vector<std::string> header;
  std::size_t first = 0;
  if (options.header) {
    if (lines.empty()) throw Error(ErrorCode::EmptyData, path + ": file is empty");
    for (auto f : split(lines[0], options.delimiter)) header.emplace_back(f);
    first = 1;
  }
  if (lines.size() <= first) throw Error(ErrorCode::EmptyData, path + ": no data rows");

  const std::size_t ncols =
      options.header ? header.size() : split(lines[first], options.delimiter).size();

  std::optional<std::size_t> label_col;
  if (options.label_column) {
    if (const int* idx = std::get_if<int>(&*options.label_column)) {
      const long i = *idx < 0 ? static_cast<long>(ncols) + *idx : *idx;
      if (i < 0 || i >= static_cast<long>(ncols))
        throw Error(ErrorCode::Schema, path + ": label column " + std::to_string(*idx) +
                                           " out of range for " + std::to_string(ncols) +
                                           " columns");
      label_col = static_cast<std::size_t>(i);
    } else {
      const auto& name = std::get<std::string>(*options.label_column);
      const auto it = std::find(header.begin(), header.end(), name);
      if (it == header.end())
        throw Error(ErrorCode::Schema, path + ": no label column named '" + name + "'");
      label_col = static_cast<std::size_t>(it - header.begin());
    }
  }
  const std::size_t nfeat = ncols - (label_col ? 1 : 0);
  if (nfeat == 0) throw Error(ErrorCode::Schema, path + ": no feature columns");

  Dataset ds;
  ds.source = path;
  ds.features.resize(static_cast<Index>(lines.size() - first), static_cast<Index>(nfeat));
  for (std::size_t r = first; r < lines.size(); ++r) {
    const auto fields = split(lines[r], options.delimiter);
    const std::string where = path + ":" + std::to_string(line_numbers[r]);
    if (fields.size() != ncols)
      throw Error(ErrorCode::Parse, where + ": expected " + std::to_string(ncols) +
                                        " fields, found " + std::to_string(fields.size()));
    const Index row = static_cast<Index>(r - first);
    Index c = 0;
    for (std::size_t f = 0; f < ncols; ++f) {
      if (label_col && f == *label_col) {
        ds.labels.emplace_back(fields[f]);
        continue;
      }
      double v;
      if (!parse_double(fields[f], v))
        throw Error(ErrorCode::Parse,
                    where + ": field " + std::to_string(f + 1) + " is not a number ('" +
                        std::string(fields[f]) + "')");
      if (!std::isfinite(v))
        throw Error(ErrorCode::Parse, where + ": row " + std::to_string(row) +
                                          " has a non-finite value in field " +
                                          std::to_string(f + 1));
      ds.features(row, c++) = v;
    }
  }
  return ds;
}

void write_csv(const std::string& path, const Dataset& ds, char delimiter) {
  require_shape(!ds.has_labels() || static_cast<Index>(ds.labels.size()) == ds.rows(),
                "write_csv: label count does not match rows");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
  for (Index i = 0; i < ds.rows(); ++i) {
    for (Index j = 0; j < ds.dim(); ++j) {
      if (j) out << delimiter;
      out << format_double(ds.features(i, j));
    }
    if (ds.has_labels()) out << delimiter << ds.labels[static_cast<std::size_t>(i)];
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::Io, "write failure on '" + path + "'");
}

Normalized l2_normalize(const Matrix& X) {
  Normalized out{X, 0};
  for (Index i = 0; i < X.rows(); ++i) {
    const double n = X.row(i).norm();
    if (n > 0)
      out.features.row(i) /= n;
    else
      ++out.zero_rows;
  }
  return out;
}

Split one_class_split(const Dataset& ds, const std::string& target, double ratio,
                      std::uint64_t seed) {
  if (!ds.has_labels()) throw Error(ErrorCode::Schema, "one_class_split: dataset has no labels");
  if (!(ratio > 0 && ratio < 1)) throw Error(ErrorCode::Domain, "one_class_split: ratio must lie in (0, 1)");
  std::vector<Index> pos, neg;
  for (Index i = 0; i < ds.rows(); ++i)
    (ds.labels[static_cast<std::size_t>(i)] == target ? pos : neg).push_back(i);
  if (pos.empty())
    throw Error(ErrorCode::Domain, "one_class_split: target class '" + target + "' is absent");

  Rng rng(seed);
  for (std::size_t i = pos.size() - 1; i > 0; --i)
    std::swap(pos[i], pos[static_cast<std::size_t>(rng.below(i + 1))]);
  const auto ntrain = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(pos.size())));
  if (ntrain == 0) throw Error(ErrorCode::EmptyData, "one_class_split: training split is empty");

  auto take = [&](const std::vector<Index>& rows, const std::string& suffix) {
    Dataset d;
    d.source = ds.source + suffix;
    d.normalized = ds.normalized;
    d.features.resize(static_cast<Index>(rows.size()), ds.dim());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      d.features.row(static_cast<Index>(r)) = ds.features.row(rows[r]);
      d.labels.push_back(ds.labels[static_cast<std::size_t>(rows[r])]);
    }
    return d;
  };
  std::vector<Index> test(pos.begin() + static_cast<std::ptrdiff_t>(ntrain), pos.end());
  test.insert(test.end(), neg.begin(), neg.end());
  return {take({pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(ntrain)}, ":train"),
          take(test, ":test")};
}

SynthKind synth_kind_from_string(const std::string& s) {
  if (s == "gaussian") return SynthKind::Gaussian;
  if (s == "arbitrary") return SynthKind::Arbitrary;
  if (s == "ring") return SynthKind::Ring;
  if (s == "ring3d") return SynthKind::Ring3d;
  throw Error(ErrorCode::Domain, "unknown synthetic kind '" + s + "'");
}

Dataset synth(const SynthParams& p, std::uint64_t seed) {
  if (p.n < 1) throw Error(ErrorCode::Domain, "synth: n must be >= 1");
  Rng rng(seed);
  Dataset ds;
  switch (p.kind) {
    case SynthKind::Gaussian: {
      if (p.d < 1) throw Error(ErrorCode::Domain, "synth: d must be >= 1");
      const Vector mean = p.mean.size() ? p.mean : Vector::Zero(p.d);
      require_shape(mean.size() == p.d, "synth: mean must have d entries");
      Matrix l = Matrix::Identity(p.d, p.d);
      if (p.cov.size()) {
        require_shape(p.cov.rows() == p.d && p.cov.cols() == p.d, "synth: cov must be d x d");
        Eigen::LLT<Matrix> llt(p.cov);
        if (llt.info() != Eigen::Success)
          throw Error(ErrorCode::Domain, "synth: covariance is not positive definite");
        l = llt.matrixL();
      }
      ds.features.resize(p.n, p.d);
      for (Index i = 0; i < p.n; ++i) {
        Vector z(p.d);
        for (Index j = 0; j < p.d; ++j) z(j) = rng.normal();
        ds.features.row(i) = (mean + l * z).transpose();
      }
      ds.source = "synth:gaussian";
      break;
    }
    case SynthKind::Arbitrary: {
      ds.features.resize(p.n, 2);
      for (Index i = 0; i < p.n; ++i) {
        const double x = 2.0 * (1.0 - rng.uniform());  // (0, 2]
        const double g = rng.normal();
        const double sign = g > 0 ? 1.0 : (g < 0 ? -1.0 : 0.0);
        const double u = rng.uniform();
        ds.features(i, 0) = x;
        ds.features(i, 1) = std::sqrt(x) * (x + sign * u);
      }
      ds.source = "synth:arbitrary";
      break;
    }
    case SynthKind::Ring:
    case SynthKind::Ring3d: {
      if (!(p.r_in > 0 && p.r_in < p.r_out))
        throw Error(ErrorCode::Domain, "synth: need 0 < r_in < r_out");
      const bool three = p.kind == SynthKind::Ring3d;
      if (three && !(p.half_height > 0))
        throw Error(ErrorCode::Domain, "synth: half_height must be > 0");
      ds.features.resize(p.n, three ? 3 : 2);
      for (Index i = 0; i < p.n; ++i) {
        const double angle = 2.0 * std::numbers::pi * rng.uniform();
        const double radius = rng.uniform(p.r_in, p.r_out);
        ds.features(i, 0) = radius * std::cos(angle);
        ds.features(i, 1) = radius * std::sin(angle);
        if (three) ds.features(i, 2) = rng.uniform(-p.half_height, p.half_height);
      }
      ds.source = three ? "synth:ring3d" : "synth:ring";
      break;
    }
  }
  return ds;
}

}  // namespace gods
