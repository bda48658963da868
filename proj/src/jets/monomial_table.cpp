#include "monomial_table.hpp"

#include <algorithm>
#include <array>
#include <mutex>
#include <stdexcept>

namespace cocontact::jets::detail {
namespace {

constexpr int kMaxBinomial = 64;

using BinomialTable = std::array<std::array<std::int64_t, kMaxBinomial + 1>, kMaxBinomial + 1>;

const BinomialTable& binomials() {
  static const BinomialTable table = [] {
    BinomialTable b{};
    for (int n = 0; n <= kMaxBinomial; ++n) {
      b[n][0] = 1;
      for (int k = 1; k <= n; ++k) b[n][k] = b[n - 1][k - 1] + (k <= n - 1 ? b[n - 1][k] : 0);
    }
    return b;
  }();
  return table;
}

std::int64_t choose(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0;
  if (n > kMaxBinomial) throw std::out_of_range("monomial table too large");
  return binomials()[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)];
}

// Exponent vectors of `vars` variables summing exactly to `sum`.
std::int64_t compositions(int vars, int sum) {
  if (vars == 0) return sum == 0 ? 1 : 0;
  return choose(sum + vars - 1, vars - 1);
}

void enumerate_degree(int vars, int pos, int remaining, std::vector<std::uint8_t>& current,
                      std::vector<std::uint8_t>& out) {
  if (pos == vars - 1) {
    current[static_cast<std::size_t>(pos)] = static_cast<std::uint8_t>(remaining);
    out.insert(out.end(), current.begin(), current.end());
    return;
  }
  for (int x = remaining; x >= 0; --x) {
    current[static_cast<std::size_t>(pos)] = static_cast<std::uint8_t>(x);
    enumerate_degree(vars, pos + 1, remaining - x, current, out);
  }
}

}  // namespace

int monomial_count(int vars, int order) { return static_cast<int>(choose(vars + order, order)); }

MonomialTable::MonomialTable(int vars, int order) : vars_(vars), order_(order) {
  if (vars < 0 || order < 0 || vars + 2 * order > kMaxBinomial || order > 255)
    throw std::out_of_range("monomial table dimensions out of range");
  prefix_.resize(static_cast<std::size_t>(order) + 1);
  for (int d = 0; d <= order; ++d) prefix_[static_cast<std::size_t>(d)] = monomial_count(vars, d);
  const int total = prefix_.back();

  degree_.reserve(static_cast<std::size_t>(total));
  if (vars == 0) {
    degree_.push_back(0);
  } else {
    std::vector<std::uint8_t> current(static_cast<std::size_t>(vars), 0);
    exponents_.reserve(static_cast<std::size_t>(total) * static_cast<std::size_t>(vars));
    for (int d = 0; d <= order; ++d) {
      enumerate_degree(vars, 0, d, current, exponents_);
      degree_.resize(static_cast<std::size_t>(prefix_[static_cast<std::size_t>(d)]), d);
    }
  }

  products_.resize(static_cast<std::size_t>(total));
  std::vector<std::uint8_t> sum(static_cast<std::size_t>(vars));
  for (int i = 0; i < total; ++i) {
    const int room = order - degree(i);
    auto& row = products_[static_cast<std::size_t>(i)];
    row.resize(static_cast<std::size_t>(size(room)));
    const auto ei = exponents(i);
    for (int j = 0; j < size(room); ++j) {
      const auto ej = exponents(j);
      for (int k = 0; k < vars; ++k)
        sum[static_cast<std::size_t>(k)] = static_cast<std::uint8_t>(ei[static_cast<std::size_t>(k)] +
                                                                     ej[static_cast<std::size_t>(k)]);
      row[static_cast<std::size_t>(j)] = rank(sum);
    }
  }

  lowered_.assign(static_cast<std::size_t>(total) * static_cast<std::size_t>(vars), -1);
  for (int i = 0; i < total; ++i) {
    const auto ei = exponents(i);
    for (int k = 0; k < vars; ++k) {
      if (ei[static_cast<std::size_t>(k)] == 0) continue;
      std::vector<std::uint8_t> e(ei.begin(), ei.end());
      --e[static_cast<std::size_t>(k)];
      lowered_[static_cast<std::size_t>(i) * static_cast<std::size_t>(vars) + static_cast<std::size_t>(k)] =
          rank(e);
    }
  }
}

int MonomialTable::rank(std::span<const std::uint8_t> e) const {
  int degree = 0;
  for (auto x : e) degree += x;
  if (degree == 0) return 0;
  std::int64_t index = prefix_[static_cast<std::size_t>(degree - 1)];
  int remaining = degree;
  for (int i = 0; i + 1 < vars_; ++i) {
    const int ei = e[static_cast<std::size_t>(i)];
    for (int x = remaining; x > ei; --x) index += compositions(vars_ - i - 1, remaining - x);
    remaining -= ei;
  }
  return static_cast<int>(index);
}

namespace {

constexpr int kCachedVars = 32;

struct GlobalCache {
  std::mutex mutex;
  std::array<std::shared_ptr<const MonomialTable>, kCachedVars + 1> tables;
};

GlobalCache& global_cache() {
  static GlobalCache cache;
  return cache;
}

}  // namespace

std::shared_ptr<const MonomialTable> table(int vars, int order) {
  if (vars < 0 || vars > kCachedVars) throw std::out_of_range("too many active variables in jet");
  thread_local std::array<std::shared_ptr<const MonomialTable>, kCachedVars + 1> local;
  auto& slot = local[static_cast<std::size_t>(vars)];
  if (slot && slot->order() >= order) return slot;

  auto& cache = global_cache();
  std::lock_guard lock(cache.mutex);
  auto& shared = cache.tables[static_cast<std::size_t>(vars)];
  if (!shared || shared->order() < order) {
    const int built = shared ? std::max(order, shared->order()) : order;
    shared = std::make_shared<const MonomialTable>(vars, built);
  }
  slot = shared;
  return slot;
}

}  // namespace cocontact::jets::detail
