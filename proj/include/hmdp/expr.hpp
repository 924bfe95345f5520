#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hmdp/rational.hpp"

namespace hmdp {

/// Closed interval of doubles.
struct Interval {
  double lo{0};
  double hi{0};
};

/// Multilinear polynomial over parameter indices with exact rational
/// coefficients: a sum of terms c * x_{i1} * ... * x_{ik} where no
/// parameter repeats within a term. Kept in canonical form at all times:
/// term variable lists sorted ascending, terms sorted lexicographically
/// by variable list, no duplicate monomials, no zero coefficients.
/// Multilinearity is what makes region extrema attainable at box
/// vertices, so products that would square a parameter are rejected.
class MultilinearExpr {
 public:
  struct Term {
    Rational coeff;
    std::vector<std::uint32_t> vars;  // sorted, distinct
  };

  MultilinearExpr() = default;
  static MultilinearExpr constant(Rational value);
  static MultilinearExpr variable(std::uint32_t index);

  MultilinearExpr operator+(const MultilinearExpr& o) const;
  MultilinearExpr operator-(const MultilinearExpr& o) const;
  /// Throws Error if the product would repeat a parameter in one term.
  MultilinearExpr operator*(const MultilinearExpr& o) const;
  bool operator==(const MultilinearExpr& o) const;

  const std::vector<Term>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  bool is_constant() const;
  /// The constant value if is_constant(), otherwise nullopt.
  std::optional<Rational> as_constant() const;
  /// Sorted list of parameter indices occurring in the expression.
  std::vector<std::uint32_t> variables() const;

  double evaluate(std::span<const double> valuation) const;

  /// Tight bounds over the box [lower, upper] (indexed by parameter).
  /// Uses vertex enumeration over the occurring parameters, which is
  /// exact for multilinear expressions; falls back to per-term interval
  /// arithmetic when more than max_vertex_params parameters occur.
  Interval bounds_over(std::span<const double> lower,
                       std::span<const double> upper,
                       unsigned max_vertex_params = 16) const;

  std::string to_string(std::span<const std::string> param_names) const;

 private:
  static MultilinearExpr from_terms(std::vector<Term> terms);
  std::vector<Term> terms_;
};

}  // namespace hmdp
