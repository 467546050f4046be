#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nab/gf.hpp"
#include "nab/oracle.hpp"

using namespace nab;

TEST_CASE("pinned moduli are the least irreducible polynomials") {
  // re-derive by exhaustive trial division where that is feasible
  for (int m : {4, 8, 16, 32}) {
    CHECK_EQ(FieldSpec::make(m).modulus_low(), FieldSpec::least_irreducible(m));
  }
  CHECK_EQ(FieldSpec::make(4).modulus_low(), 0x3);
  CHECK_EQ(FieldSpec::make(8).modulus_low(), 0x1b);
  CHECK_EQ(FieldSpec::make(16).modulus_low(), 0x2b);
  CHECK_EQ(FieldSpec::make(32).modulus_low(), 0x8d);
  CHECK_EQ(FieldSpec::make(64).modulus_low(), 0x1b);
}

TEST_CASE("on-the-fly widths and bad moduli") {
  for (int m : {1, 2, 3, 5, 7, 11, 13, 22, 29}) {
    auto f = FieldSpec::make(m);
    CHECK(FieldSpec::is_irreducible(m, f.modulus_low()));
  }
  CHECK_NOTHROW(FieldSpec::with_modulus(4, 0x13));
  CHECK_NOTHROW(FieldSpec::with_modulus(4, 0x1f));  // the other degree-4 irreducibles work too
  CHECK_NOTHROW(FieldSpec::with_modulus(4, 0x19));
  CHECK_THROWS_AS(FieldSpec::with_modulus(4, 0x11), validation_error);  // x^4+1 = (x+1)^4
  CHECK_THROWS_AS(FieldSpec::with_modulus(4, 0x23), validation_error);  // degree 5, not 4
  CHECK_THROWS_AS(FieldSpec::make(65), validation_error);
  CHECK_THROWS_AS(FieldSpec::make(0), validation_error);
}

TEST_CASE("field arithmetic basics over GF(2^4), poly x^4+x+1") {
  auto f = FieldSpec::with_modulus(4, 0x13);
  CHECK_EQ(f.add(0x5, 0x5), 0x0);  // characteristic-2 self-cancellation
  for (uint64_t a = 0; a < 16; ++a) CHECK_EQ(f.mul(a, 0x1), a);
  CHECK_EQ(f.mul(0x8, 0x2), 0x3);  // x^3 * x = x^4 = x + 1
  CHECK_THROWS_AS(f.inv(0), validation_error);
  CHECK_THROWS_AS(f.add(0x10, 0x1), validation_error);  // operand out of range
}

TEST_CASE("field axioms on sampled triples; inverse; schoolbook cross-check") {
  for (int m : {4, 8, 16, 32, 64}) {
    auto f = FieldSpec::make(m);
    auto rng = make_rng(mix64(99, m));
    for (int it = 0; it < 200; ++it) {
      uint64_t a = f.random_element(rng), b = f.random_element(rng), c = f.random_element(rng);
      CHECK_EQ(f.add(a, a), 0);
      CHECK_EQ(f.add(a, b), f.add(b, a));
      CHECK_EQ(f.mul(a, b), f.mul(b, a));
      CHECK_EQ(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
      CHECK_EQ(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
      if (a != 0) CHECK_EQ(f.mul(a, f.inv(a)), 1);
      if (m <= 32) {
        CHECK_EQ(f.mul(a, b), oracle::gf_mul_schoolbook(m, f.modulus_low(), a, b));
      }
    }
  }
  // 64-bit width against the schoolbook path too (oracle handles m = 64)
  auto f64 = FieldSpec::make(64);
  auto rng = make_rng(7);
  for (int it = 0; it < 100; ++it) {
    uint64_t a = rng(), b = rng();
    CHECK_EQ(f64.mul(a, b), oracle::gf_mul_schoolbook(64, f64.modulus_low(), a, b));
  }
}

TEST_CASE("mat_mul identity and dot product") {
  auto f = FieldSpec::make(8);
  auto rng = make_rng(5);
  auto b = random_matrix(f, 3, 4, rng);
  CHECK_EQ(mat_mul(f, FieldMatrix::identity(3), b), b);

  FieldMatrix row(1, 2), col(2, 1);
  row.at(0, 0) = 0x1d;
  row.at(0, 1) = 0x2f;
  col.at(0, 0) = 0x90;
  col.at(1, 0) = 0x07;
  auto prod = mat_mul(f, row, col);
  CHECK_EQ(prod.rows(), 1);
  CHECK_EQ(prod.cols(), 1);
  CHECK_EQ(prod.at(0, 0), f.add(f.mul(0x1d, 0x90), f.mul(0x2f, 0x07)));

  FieldMatrix bad(3, 3);
  CHECK_THROWS_AS(mat_mul(f, row, bad), validation_error);
}

TEST_CASE("mat_mul equals entry-wise brute force over GF(2^8)") {
  auto f = FieldSpec::make(8);
  auto rng = make_rng(11);
  for (int it = 0; it < 20; ++it) {
    auto a = random_matrix(f, 4, 4, rng);
    auto b = random_matrix(f, 4, 4, rng);
    auto c = mat_mul(f, a, b);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        uint64_t want = 0;
        for (int k = 0; k < 4; ++k)
          want ^= oracle::gf_mul_schoolbook(8, f.modulus_low(), a.at(i, k), b.at(k, j));
        CHECK_EQ(c.at(i, j), want);
      }
  }
}

TEST_CASE("rank and inverse") {
  auto f = FieldSpec::make(16);
  CHECK_EQ(rank_and_inverse(f, FieldMatrix(3, 3)).rank, 0);
  CHECK_FALSE(rank_and_inverse(f, FieldMatrix(3, 3)).inverse.has_value());

  auto id5 = FieldMatrix::identity(5);
  auto r = rank_and_inverse(f, id5);
  CHECK_EQ(r.rank, 5);
  REQUIRE(r.inverse.has_value());
  CHECK_EQ(*r.inverse, id5);

  auto f4 = FieldSpec::make(4);
  FieldMatrix ones(2, 2);
  ones.at(0, 0) = ones.at(0, 1) = ones.at(1, 0) = ones.at(1, 1) = 1;
  auto r1 = rank_and_inverse(f4, ones);
  CHECK_EQ(r1.rank, 1);  // identical rows: ad - bc = 0 in characteristic 2
  CHECK_FALSE(r1.inverse.has_value());

  auto rng = make_rng(3);
  for (int it = 0; it < 30; ++it) {
    auto a = random_matrix(f, 4, 4, rng);
    auto rr = rank_and_inverse(f, a);
    if (rr.inverse) {
      CHECK_EQ(mat_mul(f, a, *rr.inverse), FieldMatrix::identity(4));
      CHECK_EQ(mat_mul(f, *rr.inverse, a), FieldMatrix::identity(4));
      CHECK_NE(determinant(f, a), 0);
    } else {
      CHECK_EQ(determinant(f, a), 0);
    }
  }
}

TEST_CASE("rank bounds and product rank property") {
  auto f = FieldSpec::make(8);
  auto rng = make_rng(21);
  for (int it = 0; it < 40; ++it) {
    int n = 1 + static_cast<int>(rng() % 5);
    int m = 1 + static_cast<int>(rng() % 5);
    int k = 1 + static_cast<int>(rng() % 5);
    auto a = random_matrix(f, n, m, rng);
    auto b = random_matrix(f, m, k, rng);
    int ra = rank(f, a), rb = rank(f, b);
    CHECK_LE(ra, std::min(n, m));
    CHECK_LE(rank(f, mat_mul(f, a, b)), std::min(ra, rb));
  }
}

TEST_CASE("left null vector is a genuine witness") {
  auto f = FieldSpec::make(16);
  auto rng = make_rng(31);
  for (int it = 0; it < 40; ++it) {
    int n = 2 + static_cast<int>(rng() % 4);
    int m = 1 + static_cast<int>(rng() % 6);
    auto a = random_matrix(f, n, m, rng);
    // make rows dependent half the time
    if (it % 2 == 0 && n >= 2)
      for (int c = 0; c < m; ++c) a.at(n - 1, c) = a.at(0, c);
    auto v = left_null_vector(f, a);
    if (rank(f, a) < n) {
      REQUIRE(v.has_value());
      bool nonzero = false;
      for (auto x : *v) nonzero = nonzero || x != 0;
      CHECK(nonzero);
      for (int c = 0; c < m; ++c) {
        uint64_t dot = 0;
        for (int r = 0; r < n; ++r) dot ^= f.mul((*v)[r], a.at(r, c));
        CHECK_EQ(dot, 0);
      }
    } else {
      CHECK_FALSE(v.has_value());
    }
  }
}

TEST_CASE("random_matrix: degenerate shapes, determinism, bit uniformity") {
  auto f = FieldSpec::make(8);
  CHECK_EQ(random_matrix(f, 0, 5, uint64_t(1)).rows(), 0);
  CHECK_EQ(random_matrix(f, 5, 0, uint64_t(1)).cols(), 0);
  CHECK_EQ(random_matrix(f, 3, 3, uint64_t(42)), random_matrix(f, 3, 3, uint64_t(42)));
  CHECK_NE(random_matrix(f, 3, 3, uint64_t(42)), random_matrix(f, 3, 3, uint64_t(43)));

  const int N = 10000;
  auto m = random_matrix(f, 100, 100, uint64_t(9));
  for (int bit = 0; bit < 8; ++bit) {
    int ones = 0;
    for (int i = 0; i < 100; ++i)
      for (int j = 0; j < 100; ++j) ones += (m.at(i, j) >> bit) & 1;
    double mean = double(ones) / N;
    CHECK(mean > 0.48);
    CHECK(mean < 0.52);
  }
}

TEST_CASE("Lemma 4: random diagonal vs fixed matrix invertibility frequency") {
  // P[(S - W) invertible] >= 1 - w/2^m; S - W = S + W in characteristic 2.
  const int N = 10000;
  for (int w : {3, 6}) {
    for (int m : {8, 16}) {
      auto f = FieldSpec::make(m);
      auto w_rng = make_rng(mix64(1000, w, m));
      auto fixed_w = random_matrix(f, w, w, w_rng);
      auto s_rng = make_rng(mix64(2000, w, m));
      int ok = 0;
      for (int it = 0; it < N; ++it) {
        FieldMatrix sum = fixed_w;
        for (int i = 0; i < w; ++i) sum.at(i, i) ^= f.random_element(s_rng);
        if (rank(f, sum) == w) ++ok;
      }
      double p = 1.0 - double(w) / std::pow(2.0, m);
      double sigma = std::sqrt(p * (1 - p) / N);
      CHECK(double(ok) / N >= p - 3 * sigma);
    }
  }
}
