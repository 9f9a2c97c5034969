#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace percolab {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// Polynomial in p with arbitrary-precision integer coefficients; coefficient
// j multiplies p^j. Always trimmed: no trailing zero coefficients, and the
// zero polynomial has no coefficients at all.
class PolyP {
 public:
  PolyP() = default;
  explicit PolyP(std::vector<BigInt> coefficients) : c_(std::move(coefficients)) { trim(); }

  static PolyP constant(const BigInt& value) { return PolyP(std::vector<BigInt>{value}); }
  static PolyP p() { return PolyP(std::vector<BigInt>{0, 1}); }
  static PolyP one_minus_p() { return PolyP(std::vector<BigInt>{1, -1}); }

  [[nodiscard]] bool is_zero() const noexcept { return c_.empty(); }
  // Degree of the zero polynomial is reported as 0.
  [[nodiscard]] std::size_t degree() const noexcept { return c_.empty() ? 0 : c_.size() - 1; }
  [[nodiscard]] const std::vector<BigInt>& coefficients() const noexcept { return c_; }

  [[nodiscard]] BigInt coefficient(std::size_t j) const { return j < c_.size() ? c_[j] : BigInt{0}; }

  PolyP& operator+=(const PolyP& o) {
    if (o.c_.size() > c_.size()) c_.resize(o.c_.size());
    for (std::size_t j = 0; j < o.c_.size(); ++j) c_[j] += o.c_[j];
    trim();
    return *this;
  }
  PolyP& operator-=(const PolyP& o) {
    if (o.c_.size() > c_.size()) c_.resize(o.c_.size());
    for (std::size_t j = 0; j < o.c_.size(); ++j) c_[j] -= o.c_[j];
    trim();
    return *this;
  }
  PolyP& operator*=(const BigInt& s) {
    for (auto& x : c_) x *= s;
    trim();
    return *this;
  }

  friend PolyP operator+(PolyP a, const PolyP& b) { return a += b; }
  friend PolyP operator-(PolyP a, const PolyP& b) { return a -= b; }
  friend PolyP operator-(const PolyP& a) { return PolyP() - a; }
  friend PolyP operator*(PolyP a, const BigInt& s) { return a *= s; }
  friend PolyP operator*(const PolyP& a, const PolyP& b) {
    if (a.is_zero() || b.is_zero()) return {};
    std::vector<BigInt> out(a.c_.size() + b.c_.size() - 1);
    for (std::size_t i = 0; i < a.c_.size(); ++i) {
      if (a.c_[i] == 0) continue;
      for (std::size_t j = 0; j < b.c_.size(); ++j) out[i + j] += a.c_[i] * b.c_[j];
    }
    return PolyP(std::move(out));
  }
  PolyP& operator*=(const PolyP& o) { return *this = *this * o; }

  friend bool operator==(const PolyP&, const PolyP&) = default;

  [[nodiscard]] PolyP pow(unsigned e) const {
    PolyP result = constant(1);
    PolyP base = *this;
    while (e > 0) {
      if (e & 1u) result *= base;
      e >>= 1;
      if (e > 0) base *= base;
    }
    return result;
  }

  [[nodiscard]] PolyP derivative() const {
    if (c_.size() <= 1) return {};
    std::vector<BigInt> out(c_.size() - 1);
    for (std::size_t j = 1; j < c_.size(); ++j) out[j - 1] = c_[j] * static_cast<unsigned long long>(j);
    return PolyP(std::move(out));
  }

  // Horner evaluation; Scalar is double or Rational.
  template <class Scalar>
  [[nodiscard]] Scalar eval(const Scalar& x) const {
    Scalar acc = 0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) {
      acc = acc * x + static_cast<Scalar>(*it);
    }
    return acc;
  }

  [[nodiscard]] std::vector<std::string> to_strings() const {
    std::vector<std::string> out;
    out.reserve(c_.size());
    for (const auto& x : c_) out.push_back(x.str());
    return out;
  }

  [[nodiscard]] std::string str() const {
    if (c_.empty()) return "0";
    std::string s;
    for (std::size_t j = 0; j < c_.size(); ++j) {
      if (c_[j] == 0) continue;
      if (!s.empty()) s += c_[j] < 0 ? " - " : " + ";
      else if (c_[j] < 0) s += "-";
      const BigInt mag = c_[j] < 0 ? BigInt(-c_[j]) : c_[j];
      if (j == 0 || mag != 1) s += mag.str();
      if (j >= 1) s += (j == 1 ? "p" : "p^" + std::to_string(j));
    }
    return s;
  }

 private:
  void trim() {
    while (!c_.empty() && c_.back() == 0) c_.pop_back();
  }

  std::vector<BigInt> c_;
};

// Index of the first coefficient where a and b differ, if any.
inline std::optional<std::size_t> first_difference(const PolyP& a, const PolyP& b) {
  const std::size_t n = std::max(a.coefficients().size(), b.coefficients().size());
  for (std::size_t j = 0; j < n; ++j) {
    if (a.coefficient(j) != b.coefficient(j)) return j;
  }
  return std::nullopt;
}

// p^j (1-p)^(k-j) expanded, for j = 0..k.
inline std::vector<PolyP> bernstein_basis(unsigned k) {
  std::vector<PolyP> p_pow(k + 1);
  std::vector<PolyP> q_pow(k + 1);
  p_pow[0] = q_pow[0] = PolyP::constant(1);
  for (unsigned j = 1; j <= k; ++j) {
    p_pow[j] = p_pow[j - 1] * PolyP::p();
    q_pow[j] = q_pow[j - 1] * PolyP::one_minus_p();
  }
  std::vector<PolyP> basis(k + 1);
  for (unsigned j = 0; j <= k; ++j) basis[j] = p_pow[j] * q_pow[k - j];
  return basis;
}

// sum_j counts[j] p^j (1-p)^(k-j), with k = counts.size() - 1.
template <class Count>
PolyP from_open_count_histogram(const std::vector<Count>& counts, const std::vector<PolyP>& basis) {
  PolyP out;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (counts[j] != 0) out += basis[j] * BigInt(counts[j]);
  }
  return out;
}

}  // namespace percolab
