#include <doctest.h>

#include <functional>
#include <set>

#include "gods/data_io.hpp"
#include "gods/random.hpp"
#include "temp_dir.hpp"

using namespace gods;

namespace {

using testing::TempDir;

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Numeric;
}

Dataset labelled(int pos, int neg) {
  Dataset ds;
  ds.features.resize(pos + neg, 2);
  for (int i = 0; i < pos + neg; ++i) {
    ds.features.row(i) << i, -i;
    ds.labels.push_back(i < pos ? "pos" : "neg");
  }
  return ds;
}

}  // namespace

TEST_SUITE("data_io") {
  TEST_CASE("load_csv with a trailing label column") {
    TempDir tmp;
    CsvOptions o;
    o.label_column = -1;
    const Dataset ds = load_csv(tmp.file("a.csv", "1,2,pos\n3,4,neg\n"), o);
    CHECK(ds.rows() == 2);
    CHECK(ds.dim() == 2);
    CHECK(ds.features(1, 0) == 3.0);
    CHECK(ds.labels == std::vector<std::string>{"pos", "neg"});
  }

  TEST_CASE("load_csv header, named label, whitespace and blank lines") {
    TempDir tmp;
    CsvOptions o;
    o.header = true;
    o.label_column = std::string("class");
    const Dataset ds = load_csv(tmp.file("b.csv", "x, class ,y\n\n 1.5 , a, +2e-1\r\n-3,b,4\n"), o);
    CHECK(ds.rows() == 2);
    CHECK(ds.features(0, 1) == 0.2);
    CHECK(ds.labels[0] == "a");
  }

  TEST_CASE("load_csv without labels keeps every column") {
    TempDir tmp;
    CsvOptions o;
    o.delimiter = ';';
    const Dataset ds = load_csv(tmp.file("c.csv", "1;2;3\n4;5;6\n"), o);
    CHECK(ds.dim() == 3);
    CHECK_FALSE(ds.has_labels());
  }

  TEST_CASE("load_csv errors") {
    TempDir tmp;
    CHECK(code_of([&] { load_csv(tmp.file("e.csv", "")); }) == ErrorCode::EmptyData);
    CHECK(code_of([&] { load_csv(tmp / "missing.csv"); }) == ErrorCode::Io);
    CHECK(code_of([&] { load_csv(tmp.file("r.csv", "1,2\n3\n")); }) == ErrorCode::Parse);
    CHECK(code_of([&] { load_csv(tmp.file("n.csv", "1,2\n3,x\n")); }) == ErrorCode::Parse);
    CHECK(code_of([&] { load_csv(tmp.file("i.csv", "1,2\n3,inf\n")); }) == ErrorCode::Parse);
    CsvOptions o;
    o.label_column = 5;
    CHECK(code_of([&] { load_csv(tmp.file("l.csv", "1,2\n"), o); }) == ErrorCode::Schema);
    o.header = true;
    o.label_column = std::string("nope");
    CHECK(code_of([&] { load_csv(tmp.file("h.csv", "a,b\n1,2\n"), o); }) == ErrorCode::Schema);
    o.header = false;
    o.label_column = 0;
    CHECK(code_of([&] { load_csv(tmp.file("o.csv", "a\nb\n"), o); }) == ErrorCode::Schema);
  }

  TEST_CASE("parse errors name the line") {
    TempDir tmp;
    try {
      load_csv(tmp.file("p.csv", "1,2\n\n3,oops\n"));
      FAIL("expected a parse error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("p.csv:3") != std::string::npos);
    }
  }

  TEST_CASE("write then load reproduces features bit-exactly") {
    TempDir tmp;
    Rng rng(4);
    Dataset ds;
    ds.features = rng.gaussian(20, 4) * 1e3;
    ds.features(0, 0) = 1e-300;
    ds.features(1, 1) = -0.1;
    for (int i = 0; i < 20; ++i) ds.labels.push_back(i % 3 ? "in" : "out");
    const auto path = tmp / "rt.csv";
    write_csv(path, ds);
    CsvOptions o;
    o.label_column = -1;
    const Dataset back = load_csv(path, o);
    CHECK(back.features == ds.features);
    CHECK(back.labels == ds.labels);
  }

  TEST_CASE("l2_normalize") {
    Matrix x(3, 2);
    x << 3, 4, 0, 0, 0.6, 0.8;
    const Normalized n = l2_normalize(x);
    CHECK(n.features(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(n.features(0, 1) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(n.features.row(1).isZero(0));
    CHECK(n.zero_rows == 1);
    CHECK((n.features.row(2) - x.row(2)).norm() <= 1e-15);

    Rng rng(2);
    const Matrix r = l2_normalize(rng.gaussian(50, 7)).features;
    CHECK((r.rowwise().norm().array() - 1.0).abs().maxCoeff() <= 1e-12);
    CHECK((l2_normalize(r).features - r).norm() <= 1e-14);
  }

  TEST_CASE("one_class_split counts and determinism") {
    const Dataset ds = labelled(10, 4);
    const Split s = one_class_split(ds, "pos", 0.7, 3);
    CHECK(s.train.rows() == 7);
    CHECK(s.test.rows() == 7);
    CHECK(std::count(s.test.labels.begin(), s.test.labels.end(), "pos") == 3);
    for (const auto& l : s.train.labels) CHECK(l == "pos");
    const Split again = one_class_split(ds, "pos", 0.7, 3);
    CHECK(again.train.features == s.train.features);
    CHECK(again.test.features == s.test.features);
  }

  TEST_CASE("one_class_split neither loses nor duplicates positives") {
    const Dataset ds = labelled(23, 9);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Split s = one_class_split(ds, "pos", 0.7, seed);
      std::multiset<double> seen;
      for (Index i = 0; i < s.train.rows(); ++i) seen.insert(s.train.features(i, 0));
      for (Index i = 0; i < s.test.rows(); ++i)
        if (s.test.labels[static_cast<std::size_t>(i)] == "pos") seen.insert(s.test.features(i, 0));
      std::multiset<double> expected;
      for (int i = 0; i < 23; ++i) expected.insert(i);
      CHECK(seen == expected);
    }
  }

  TEST_CASE("one_class_split errors") {
    const Dataset ds = labelled(3, 2);
    CHECK(code_of([&] { one_class_split(ds, "missing", 0.7, 0); }) == ErrorCode::Domain);
    CHECK(code_of([&] { one_class_split(ds, "pos", 1.0, 0); }) == ErrorCode::Domain);
    CHECK(code_of([&] { one_class_split(ds, "pos", 0.1, 0); }) == ErrorCode::EmptyData);
    Dataset unlabelled;
    unlabelled.features = Matrix::Zero(2, 2);
    CHECK(code_of([&] { one_class_split(unlabelled, "pos", 0.7, 0); }) == ErrorCode::Schema);
  }

  TEST_CASE("ring radii stay inside the annulus") {
    SynthParams p;
    p.kind = SynthKind::Ring;
    p.n = 300;
    const Dataset ds = synth(p, 1);
    CHECK(ds.rows() == 300);
    const Vector r = ds.features.rowwise().norm();
    CHECK(r.minCoeff() >= 0.7 - 1e-12);
    CHECK(r.maxCoeff() <= 1.0 + 1e-12);

    p.kind = SynthKind::Ring3d;
    const Dataset d3 = synth(p, 1);
    CHECK(d3.dim() == 3);
    CHECK(d3.features.col(2).cwiseAbs().maxCoeff() <= p.half_height);
  }

  TEST_CASE("gaussian sample mean is within 3 sigma / sqrt(n)") {
    SynthParams p;
    p.n = 100;
    p.d = 2;
    const Dataset ds = synth(p, 6);
    const Vector mean = ds.features.colwise().mean();
    CHECK(mean.cwiseAbs().maxCoeff() <= 3.0 / std::sqrt(100.0));
  }

  TEST_CASE("arbitrary: a single pair traced through the generator") {
    SynthParams p;
    p.kind = SynthKind::Arbitrary;
    p.n = 1;
    const Dataset ds = synth(p, 42);
    Rng rng(42);
    const double x = 2.0 * (1.0 - rng.uniform());
    const double g = rng.normal();
    const double u = rng.uniform();
    const double y = std::sqrt(x) * (x + (g > 0 ? 1.0 : -1.0) * u);
    CHECK(ds.features(0, 0) == x);
    CHECK(ds.features(0, 1) == y);
    CHECK(x > 0.0);
    CHECK(x <= 2.0);
  }

  TEST_CASE("synth is deterministic and validates parameters") {
    SynthParams p;
    p.kind = SynthKind::Ring;
    CHECK(synth(p, 3).features == synth(p, 3).features);
    CHECK(synth(p, 3).features != synth(p, 4).features);
    p.r_in = 1.0;
    CHECK_THROWS_AS((void)synth(p, 0), Error);
    p = SynthParams{};
    p.n = 0;
    CHECK_THROWS_AS((void)synth(p, 0), Error);
    p = SynthParams{};
    p.mean = Vector::Zero(3);
    CHECK_THROWS_AS((void)synth(p, 0), Error);
    CHECK_THROWS_AS(synth_kind_from_string("spiral"), Error);
  }
}
