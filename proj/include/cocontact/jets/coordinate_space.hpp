#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace cocontact::jets {

/// Which product space the coordinates describe.
enum class SpaceKind {
  kLagrangian,   // (t, q, v, s)
  kHamiltonian,  // (t, q, p, s)
  kPontryagin,   // (t, q, v, p, s)
};

/// Fixed coordinate layout for the spaces of a system with n degrees of
/// freedom. Names are 1-based: q1..qn, v1..vn, p1..pn.
class CoordinateSpace {
 public:
  CoordinateSpace(SpaceKind kind, int n);

  SpaceKind kind() const { return kind_; }
  int n() const { return n_; }
  int dim() const;

  int t() const { return 0; }
  int q(int i) const { return 1 + i; }
  /// -1 when the space has no velocities (resp. momenta).
  int v(int i) const;
  int p(int i) const;
  int s() const { return dim() - 1; }

  bool has_velocities() const { return kind_ != SpaceKind::kHamiltonian; }
  bool has_momenta() const { return kind_ != SpaceKind::kLagrangian; }

  std::string name(int index) const;
  std::optional<int> index_of(std::string_view name) const;

 private:
  SpaceKind kind_;
  int n_;
};

}  // namespace cocontact::jets
