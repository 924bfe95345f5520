#include "hmdp/expr.hpp"

#include <algorithm>
#include <cmath>

namespace hmdp {

MultilinearExpr MultilinearExpr::constant(Rational value) {
  MultilinearExpr e;
  if (!value.is_zero()) e.terms_.push_back({value, {}});
  return e;
}

MultilinearExpr MultilinearExpr::variable(std::uint32_t index) {
  MultilinearExpr e;
  e.terms_.push_back({Rational::integer(1), {index}});
  return e;
}

MultilinearExpr MultilinearExpr::from_terms(std::vector<Term> terms) {
  std::sort(terms.begin(), terms.end(),
            [](const Term& a, const Term& b) { return a.vars < b.vars; });
  MultilinearExpr e;
  for (auto& t : terms) {
    if (!e.terms_.empty() && e.terms_.back().vars == t.vars) {
      e.terms_.back().coeff = e.terms_.back().coeff + t.coeff;
      if (e.terms_.back().coeff.is_zero()) e.terms_.pop_back();
    } else if (!t.coeff.is_zero()) {
      e.terms_.push_back(std::move(t));
    }
  }
  return e;
}

MultilinearExpr MultilinearExpr::operator+(const MultilinearExpr& o) const {
  std::vector<Term> all = terms_;
  all.insert(all.end(), o.terms_.begin(), o.terms_.end());
  return from_terms(std::move(all));
}

MultilinearExpr MultilinearExpr::operator-(const MultilinearExpr& o) const {
  std::vector<Term> all = terms_;
  for (const Term& t : o.terms_) all.push_back({-t.coeff, t.vars});
  return from_terms(std::move(all));
}

MultilinearExpr MultilinearExpr::operator*(const MultilinearExpr& o) const {
  std::vector<Term> all;
  for (const Term& a : terms_) {
    for (const Term& b : o.terms_) {
      Term t;
      t.coeff = a.coeff * b.coeff;
      t.vars.reserve(a.vars.size() + b.vars.size());
      std::merge(a.vars.begin(), a.vars.end(), b.vars.begin(), b.vars.end(),
                 std::back_inserter(t.vars));
      if (std::adjacent_find(t.vars.begin(), t.vars.end()) != t.vars.end())
        throw Error("product is not multilinear: a parameter occurs twice");
      all.push_back(std::move(t));
    }
  }
  return from_terms(std::move(all));
}

bool MultilinearExpr::operator==(const MultilinearExpr& o) const {
  if (terms_.size() != o.terms_.size()) return false;
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (!(terms_[i].coeff == o.terms_[i].coeff) ||
        terms_[i].vars != o.terms_[i].vars)
      return false;
  }
  return true;
}

bool MultilinearExpr::is_constant() const {
  return terms_.empty() || (terms_.size() == 1 && terms_[0].vars.empty());
}

std::optional<Rational> MultilinearExpr::as_constant() const {
  if (terms_.empty()) return Rational();
  if (terms_.size() == 1 && terms_[0].vars.empty()) return terms_[0].coeff;
  return std::nullopt;
}

std::vector<std::uint32_t> MultilinearExpr::variables() const {
  std::vector<std::uint32_t> vars;
  for (const Term& t : terms_)
    vars.insert(vars.end(), t.vars.begin(), t.vars.end());
  std::sort(vars.begin(), vars.end());
  vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
  return vars;
}

double MultilinearExpr::evaluate(std::span<const double> valuation) const {
  double sum = 0;
  for (const Term& t : terms_) {
    double prod = t.coeff.to_double();
    for (std::uint32_t v : t.vars) prod *= valuation[v];
    sum += prod;
  }
  return sum;
}

Interval MultilinearExpr::bounds_over(std::span<const double> lower,
                                      std::span<const double> upper,
                                      unsigned max_vertex_params) const {
  std::vector<std::uint32_t> vars = variables();
  if (vars.size() <= max_vertex_params) {
    // Vertex enumeration; exact because the expression is multilinear.
    std::vector<double> point(lower.begin(), lower.end());
    Interval out{INFINITY, -INFINITY};
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << vars.size());
         ++mask) {
      for (std::size_t k = 0; k < vars.size(); ++k)
        point[vars[k]] = (mask >> k) & 1 ? upper[vars[k]] : lower[vars[k]];
      double v = evaluate(point);
      out.lo = std::min(out.lo, v);
      out.hi = std::max(out.hi, v);
    }
    if (vars.empty() && terms_.empty()) out = {0, 0};
    return out;
  }
  // Interval arithmetic per term; sound but possibly loose.
  Interval out{0, 0};
  for (const Term& t : terms_) {
    Interval term{t.coeff.to_double(), t.coeff.to_double()};
    for (std::uint32_t v : t.vars) {
      double a = term.lo * lower[v], b = term.lo * upper[v];
      double c = term.hi * lower[v], d = term.hi * upper[v];
      term = {std::min(std::min(a, b), std::min(c, d)),
              std::max(std::max(a, b), std::max(c, d))};
    }
    out.lo += term.lo;
    out.hi += term.hi;
  }
  return out;
}

std::string MultilinearExpr::to_string(
    std::span<const std::string> param_names) const {
  if (terms_.empty()) return "0";
  std::string out;
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    const Term& t = terms_[i];
    Rational c = t.coeff;
    if (i == 0) {
      if (c.num() < 0) {
        out += "-";
        c = -c;
      }
    } else {
      out += c.num() < 0 ? " - " : " + ";
      if (c.num() < 0) c = -c;
    }
    bool print_coeff = t.vars.empty() || !c.is_one();
    if (print_coeff) out += c.to_string();
    for (std::size_t k = 0; k < t.vars.size(); ++k) {
      if (print_coeff || k > 0) out += "*";
      out += param_names[t.vars[k]];
    }
  }
  return out;
}

}  // namespace hmdp
