#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "nab/errors.hpp"
#include "nab/rng.hpp"

namespace nab {

// GF(2^m) with a fixed monic irreducible modulus of degree exactly m.
// Elements are m-bit values read as polynomials over GF(2). The modulus is
// stored without its leading x^m term so m = 64 fits in a word.
class FieldSpec {
 public:
  // Field with the pinned modulus for this width: the lexicographically
  // least irreducible polynomial of degree m (table for m in
  // {4,8,16,32,64}, searched otherwise; search is limited to m <= 32).
  static FieldSpec make(int m) {
    static std::map<int, uint64_t> cache;
    static std::mutex mu;
    {
      std::lock_guard<std::mutex> lock(mu);
      auto it = cache.find(m);
      if (it != cache.end()) return FieldSpec(m, it->second, /*checked=*/true);
    }
    uint64_t low = pinned_modulus(m);
    {
      std::lock_guard<std::mutex> lock(mu);
      cache[m] = low;
    }
    return FieldSpec(m, low, /*checked=*/true);
  }

  // Field with a caller-provided modulus, given as the full bit sequence
  // including the x^m term (so m <= 63 here). Irreducibility is verified by
  // exhaustive trial division.
  static FieldSpec with_modulus(int m, uint64_t full_poly) {
    if (m < 1 || m > 63) throw validation_error("FieldSpec: width out of range for explicit modulus");
    if ((full_poly >> m) != 1) throw validation_error("FieldSpec: modulus degree is not exactly m");
    uint64_t low = full_poly & ((1ull << m) - 1);
    if (m > 32) throw validation_error("FieldSpec: explicit moduli supported up to m = 32");
    if (!is_irreducible(m, low)) throw validation_error("FieldSpec: modulus is reducible");
    return FieldSpec(m, low, /*checked=*/true);
  }

  int m() const { return m_; }
  uint64_t mask() const { return mask_; }
  // Modulus coefficients 0..m-1 (the x^m term is implicit).
  uint64_t modulus_low() const { return poly_low_; }

  std::string modulus_string() const {
    std::string s = "x^" + std::to_string(m_);
    for (int i = m_ - 1; i >= 0; --i) {
      if ((poly_low_ >> i) & 1) {
        if (i == 0)
          s += " + 1";
        else if (i == 1)
          s += " + x";
        else
          s += " + x^" + std::to_string(i);
      }
    }
    return s;
  }

  void check_operand(uint64_t a) const {
    if ((a & ~mask_) != 0) throw validation_error("field operand out of range");
  }

  uint64_t add(uint64_t a, uint64_t b) const {
    check_operand(a);
    check_operand(b);
    return a ^ b;
  }

  uint64_t mul(uint64_t a, uint64_t b) const {
    check_operand(a);
    check_operand(b);
    return mul_raw(a, b);
  }

  uint64_t inv(uint64_t a) const {
    check_operand(a);
    if (a == 0) throw validation_error("field inverse of zero");
    // a^(2^m - 2); the multiplicative group has order 2^m - 1.
    return pow(a, mask_ - 1);
  }

  uint64_t pow(uint64_t a, uint64_t e) const {
    uint64_t r = 1, base = a;
    while (e) {
      if (e & 1) r = mul_raw(r, base);
      base = mul_raw(base, base);
      e >>= 1;
    }
    return r;
  }

  uint64_t random_element(std::mt19937_64& rng) const { return rng() & mask_; }

  friend bool operator==(const FieldSpec& a, const FieldSpec& b) {
    return a.m_ == b.m_ && a.poly_low_ == b.poly_low_;
  }

  // Exhaustive trial division by every polynomial of degree 1..m/2.
  static bool is_irreducible(int m, uint64_t poly_low) {
    if (m < 1 || m > 32) throw validation_error("is_irreducible: trial division limited to m <= 32");
    if ((poly_low & 1) == 0) return m == 1 && poly_low == 0;  // divisible by x
    for (int d = 1; 2 * d <= m; ++d) {
      for (uint64_t dl = 0; dl < (1ull << d); ++dl) {
        uint64_t divisor = (1ull << d) | dl;  // monic degree d
        if (poly_mod(m, poly_low, d, divisor) == 0) return false;
      }
    }
    return true;
  }

  static uint64_t least_irreducible(int m) {
    if (m < 1 || m > 32) throw validation_error("least_irreducible: search limited to m <= 32");
    for (uint64_t low = 1;; low += 2) {
      if (is_irreducible(m, low)) return low;
    }
  }

 private:
  FieldSpec(int m, uint64_t poly_low, bool) : m_(m), poly_low_(poly_low) {
    mask_ = (m == 64) ? ~0ull : ((1ull << m) - 1);
  }

  uint64_t mul_raw(uint64_t a, uint64_t b) const {
    uint64_t r = 0;
    while (b) {
      if (b & 1) r ^= a;
      b >>= 1;
      uint64_t carry = (a >> (m_ - 1)) & 1;
      a = (a << 1) & mask_;
      if (carry) a ^= poly_low_;
    }
    return r;
  }

  // Remainder of (x^m + poly_low) modulo a monic divisor of degree d.
  static uint64_t poly_mod(int m, uint64_t poly_low, int d, uint64_t divisor) {
    // Work on the full dividend bit set; m <= 32 so it fits in 64 bits.
    uint64_t rem = (1ull << m) | poly_low;
    for (int shift = m - d; shift >= 0; --shift) {
      if ((rem >> (shift + d)) & 1) rem ^= divisor << shift;
    }
    return rem;
  }

  static uint64_t pinned_modulus(int m) {
    // Lexicographically least irreducible polynomials; the m <= 32 entries
    // are re-checked by trial division in the test suite. Published in the
    // README for cross-implementation reproducibility.
    switch (m) {
      case 4: return 0x3;                  // x^4 + x + 1
      case 8: return 0x1b;                 // x^8 + x^4 + x^3 + x + 1
      case 16: return 0x2b;                // x^16 + x^5 + x^3 + x + 1
      case 32: return 0x8d;                // x^32 + x^7 + x^3 + x^2 + 1
      case 64: return 0x1b;                // x^64 + x^4 + x^3 + x + 1
      default: break;
    }
    if (m < 1 || m > 64) throw validation_error("FieldSpec: supported widths are 1..64");
    if (m > 32) throw validation_error("FieldSpec: widths above 32 limited to the built-in table (64)");
    return least_irreducible(m);
  }

  int m_;
  uint64_t poly_low_;
  uint64_t mask_;
};

// Dense row-major matrix over GF(2^m). Plain data; all arithmetic goes
// through a FieldSpec passed to the free functions below.
class FieldMatrix {
 public:
  FieldMatrix() = default;
  FieldMatrix(int rows, int cols) : rows_(rows), cols_(cols), a_(size_t(rows) * cols, 0) {
    if (rows < 0 || cols < 0) throw validation_error("FieldMatrix: negative shape");
  }

  static FieldMatrix identity(int n) {
    FieldMatrix m(n, n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1;
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  uint64_t& at(int r, int c) { return a_[size_t(r) * cols_ + c]; }
  uint64_t at(int r, int c) const { return a_[size_t(r) * cols_ + c]; }
  const std::vector<uint64_t>& data() const { return a_; }

  friend bool operator==(const FieldMatrix& x, const FieldMatrix& y) {
    return x.rows_ == y.rows_ && x.cols_ == y.cols_ && x.a_ == y.a_;
  }

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<uint64_t> a_;
};

inline FieldMatrix mat_mul(const FieldSpec& f, const FieldMatrix& a, const FieldMatrix& b) {
  if (a.cols() != b.rows()) throw validation_error("mat_mul: shape mismatch");
  FieldMatrix out(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i) {
    for (int k = 0; k < a.cols(); ++k) {
      uint64_t aik = a.at(i, k);
      if (!aik) continue;
      for (int j = 0; j < b.cols(); ++j) {
        uint64_t bkj = b.at(k, j);
        if (bkj) out.at(i, j) ^= f.mul(aik, bkj);
      }
    }
  }
  return out;
}

struct RankResult {
  int rank = 0;
  std::optional<FieldMatrix> inverse;  // present iff square and full rank
};

// Gaussian elimination with first-nonzero pivoting in deterministic column
// order (no magnitude concept in a finite field).
inline RankResult rank_and_inverse(const FieldSpec& f, const FieldMatrix& a) {
  int n = a.rows(), m = a.cols();
  FieldMatrix w = a;
  bool square = (n == m);
  FieldMatrix inv = square ? FieldMatrix::identity(n) : FieldMatrix();
  int rank = 0;
  for (int col = 0; col < m && rank < n; ++col) {
    int piv = -1;
    for (int r = rank; r < n; ++r)
      if (w.at(r, col)) {
        piv = r;
        break;
      }
    if (piv < 0) continue;
    if (piv != rank) {
      for (int c = 0; c < m; ++c) std::swap(w.at(piv, c), w.at(rank, c));
      if (square)
        for (int c = 0; c < n; ++c) std::swap(inv.at(piv, c), inv.at(rank, c));
    }
    uint64_t pinv = f.inv(w.at(rank, col));
    for (int c = 0; c < m; ++c) w.at(rank, c) = f.mul(w.at(rank, c), pinv);
    if (square)
      for (int c = 0; c < n; ++c) inv.at(rank, c) = f.mul(inv.at(rank, c), pinv);
    for (int r = 0; r < n; ++r) {
      if (r == rank) continue;
      uint64_t factor = w.at(r, col);
      if (!factor) continue;
      for (int c = 0; c < m; ++c) w.at(r, c) ^= f.mul(factor, w.at(rank, c));
      if (square)
        for (int c = 0; c < n; ++c) inv.at(r, c) ^= f.mul(factor, inv.at(rank, c));
    }
    ++rank;
  }
  RankResult res;
  res.rank = rank;
  if (square && rank == n) res.inverse = std::move(inv);
  return res;
}

inline int rank(const FieldSpec& f, const FieldMatrix& a) { return rank_and_inverse(f, a).rank; }

inline uint64_t determinant(const FieldSpec& f, const FieldMatrix& a) {
  if (a.rows() != a.cols()) throw validation_error("determinant: not square");
  int n = a.rows();
  FieldMatrix w = a;
  uint64_t det = 1;  // row swaps flip sign, which is the identity here
  for (int col = 0; col < n; ++col) {
    int piv = -1;
    for (int r = col; r < n; ++r)
      if (w.at(r, col)) {
        piv = r;
        break;
      }
    if (piv < 0) return 0;
    if (piv != col)
      for (int c = 0; c < n; ++c) std::swap(w.at(piv, c), w.at(col, c));
    det = f.mul(det, w.at(col, col));
    uint64_t pinv = f.inv(w.at(col, col));
    for (int r = col + 1; r < n; ++r) {
      uint64_t factor = f.mul(w.at(r, col), pinv);
      if (!factor) continue;
      for (int c = col; c < n; ++c) w.at(r, c) ^= f.mul(factor, w.at(col, c));
    }
  }
  return det;
}

// A nonzero row vector v with v * a = 0, when rank(a) < rows; this is the
// left null space, computed by eliminating the transpose.
inline std::optional<std::vector<uint64_t>> left_null_vector(const FieldSpec& f, const FieldMatrix& a) {
  int n = a.rows(), m = a.cols();
  FieldMatrix t(m, n);  // transpose; null space of t = left null space of a
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) t.at(j, i) = a.at(i, j);

  // Reduced row echelon form of t with pivot bookkeeping.
  std::vector<int> pivot_of_col(n, -1);
  int r = 0;
  for (int col = 0; col < n && r < m; ++col) {
    int piv = -1;
    for (int row = r; row < m; ++row)
      if (t.at(row, col)) {
        piv = row;
        break;
      }
    if (piv < 0) continue;
    if (piv != r)
      for (int c = 0; c < n; ++c) std::swap(t.at(piv, c), t.at(r, c));
    uint64_t pinv = f.inv(t.at(r, col));
    for (int c = 0; c < n; ++c) t.at(r, c) = f.mul(t.at(r, c), pinv);
    for (int row = 0; row < m; ++row) {
      if (row == r) continue;
      uint64_t factor = t.at(row, col);
      if (!factor) continue;
      for (int c = 0; c < n; ++c) t.at(row, c) ^= f.mul(factor, t.at(r, c));
    }
    pivot_of_col[col] = r;
    ++r;
  }
  // Find a free column and build the corresponding null vector.
  for (int col = 0; col < n; ++col) {
    if (pivot_of_col[col] >= 0) continue;
    std::vector<uint64_t> v(n, 0);
    v[col] = 1;
    for (int c = 0; c < n; ++c) {
      int pr = pivot_of_col[c];
      if (pr >= 0) v[c] = t.at(pr, col);  // x_pivot = -sum(free terms); minus is identity
    }
    return v;
  }
  return std::nullopt;
}

inline FieldMatrix random_matrix(const FieldSpec& f, int rows, int cols, std::mt19937_64& rng) {
  FieldMatrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m.at(i, j) = f.random_element(rng);
  return m;
}

inline FieldMatrix random_matrix(const FieldSpec& f, int rows, int cols, uint64_t seed) {
  auto rng = make_rng(seed);
  return random_matrix(f, rows, cols, rng);
}

}  // namespace nab
