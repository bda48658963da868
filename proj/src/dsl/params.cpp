#include "cocontact/dsl/params.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>

namespace cocontact::dsl {
namespace {

bool is_identifier(const std::string& name) {
  if (name.empty()) return false;
  const auto first = static_cast<unsigned char>(name[0]);
  if (!std::isalpha(first) && first != '_') return false;
  for (char c : name) {
    const auto u = static_cast<unsigned char>(c);
    if (!std::isalnum(u) && u != '_') return false;
  }
  return true;
}

}  // namespace

ParamTable::ParamTable(std::initializer_list<std::pair<const std::string, double>> entries) {
  for (const auto& [name, value] : entries) set(name, value);
}

void ParamTable::set(const std::string& name, double value) {
  if (!is_identifier(name)) throw std::invalid_argument("invalid parameter name '" + name + "'");
  if (!std::isfinite(value)) throw std::invalid_argument("parameter '" + name + "' must be finite");
  values_[name] = value;
}

std::optional<double> ParamTable::find(std::string_view name) const {
  auto it = values_.find(name);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

double ParamTable::at(std::string_view name) const {
  auto it = values_.find(name);
  if (it == values_.end()) throw std::out_of_range("unknown parameter '" + std::string(name) + "'");
  return it->second;
}

}  // namespace cocontact::dsl
