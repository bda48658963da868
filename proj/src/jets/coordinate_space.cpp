#include "cocontact/jets/coordinate_space.hpp"

#include <charconv>
#include <stdexcept>

namespace cocontact::jets {

CoordinateSpace::CoordinateSpace(SpaceKind kind, int n) : kind_(kind), n_(n) {
  if (n < 1) throw std::invalid_argument("configuration dimension must be positive");
}

int CoordinateSpace::dim() const { return kind_ == SpaceKind::kPontryagin ? 3 * n_ + 2 : 2 * n_ + 2; }

int CoordinateSpace::v(int i) const { return has_velocities() ? 1 + n_ + i : -1; }

int CoordinateSpace::p(int i) const {
  switch (kind_) {
    case SpaceKind::kLagrangian: return -1;
    case SpaceKind::kHamiltonian: return 1 + n_ + i;
    case SpaceKind::kPontryagin: return 1 + 2 * n_ + i;
  }
  return -1;
}

std::string CoordinateSpace::name(int index) const {
  if (index < 0 || index >= dim()) throw std::out_of_range("coordinate index out of range");
  if (index == t()) return "t";
  if (index == s()) return "s";
  if (index <= n_) return "q" + std::to_string(index);
  const int block = (index - 1) / n_;
  const int i = (index - 1) % n_ + 1;
  if (block == 1 && has_velocities()) return "v" + std::to_string(i);
  return "p" + std::to_string(i);
}

std::optional<int> CoordinateSpace::index_of(std::string_view name) const {
  if (name == "t") return t();
  if (name == "s") return s();
  if (name.size() < 2) return std::nullopt;
  int i = 0;
  const auto* first = name.data() + 1;
  const auto* last = name.data() + name.size();
  auto [ptr, ec] = std::from_chars(first, last, i);
  if (ec != std::errc() || ptr != last || *first == '0' || i < 1 || i > n_) return std::nullopt;
  switch (name[0]) {
    case 'q': return q(i - 1);
    case 'v': return has_velocities() ? std::optional<int>(v(i - 1)) : std::nullopt;
    case 'p': return has_momenta() ? std::optional<int>(p(i - 1)) : std::nullopt;
    default: return std::nullopt;
  }
}

}  // namespace cocontact::jets
