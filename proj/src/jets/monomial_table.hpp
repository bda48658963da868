#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace cocontact::jets::detail {

/// Enumeration of the monomials in `vars` variables with total degree up to
/// `order`. Monomials are graded: every monomial of degree d precedes every
/// monomial of degree d + 1, so the table for a given order is a prefix of the
/// table for any higher order.
class MonomialTable {
 public:
  MonomialTable(int vars, int order);

  int vars() const { return vars_; }
  int order() const { return order_; }

  /// Number of monomials of degree <= `order`.
  int size(int order) const { return prefix_[static_cast<std::size_t>(order)]; }
  int degree(int index) const { return degree_[static_cast<std::size_t>(index)]; }

  std::span<const std::uint8_t> exponents(int index) const {
    return {exponents_.data() + static_cast<std::size_t>(index) * static_cast<std::size_t>(vars_),
            static_cast<std::size_t>(vars_)};
  }

  int rank(std::span<const std::uint8_t> exponents) const;

  /// products(i)[j] is the index of monomial(i) * monomial(j); defined for
  /// every j < size(order() - degree(i)).
  std::span<const int> products(int index) const {
    const auto& row = products_[static_cast<std::size_t>(index)];
    return {row.data(), row.size()};
  }

  /// Index of monomial(index) / x_var, or -1 when the exponent of x_var is 0.
  int lowered(int index, int var) const {
    return lowered_[static_cast<std::size_t>(index) * static_cast<std::size_t>(vars_) +
                    static_cast<std::size_t>(var)];
  }

 private:
  int vars_;
  int order_;
  std::vector<int> prefix_;
  std::vector<int> degree_;
  std::vector<std::uint8_t> exponents_;
  std::vector<std::vector<int>> products_;
  std::vector<int> lowered_;
};

/// Shared table covering at least `order`; safe to call from any thread.
std::shared_ptr<const MonomialTable> table(int vars, int order);

/// Number of monomials in `vars` variables of degree <= `order`.
int monomial_count(int vars, int order);

}  // namespace cocontact::jets::detail
