#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace cocontact::dsl {

/// Named real constants referenced by expressions (alpha, gamma, m, ...).
class ParamTable {
 public:
  ParamTable() = default;
  ParamTable(std::initializer_list<std::pair<const std::string, double>> entries);

  /// Inserts or overwrites. Throws std::invalid_argument for a non-finite
  /// value or a name that is not a valid identifier.
  void set(const std::string& name, double value);
  std::optional<double> find(std::string_view name) const;
  /// Throws std::out_of_range when the name is absent.
  double at(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name).has_value(); }

  const std::map<std::string, double, std::less<>>& entries() const { return values_; }
  bool empty() const { return values_.empty(); }

 private:
  std::map<std::string, double, std::less<>> values_;
};

}  // namespace cocontact::dsl
