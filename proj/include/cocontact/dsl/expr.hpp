#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cocontact/dsl/params.hpp"
#include "cocontact/jets/coordinate_space.hpp"
#include "cocontact/jets/jet.hpp"

namespace cocontact::dsl {

enum class NodeKind { kConstant, kVariable, kParameter, kNegate, kAdd, kSub, kMul, kDiv, kPow, kCall };
enum class Function { kSin, kCos, kExp, kLn, kSqrt, kPow };

struct Node {
  NodeKind kind;
  double value = 0.0;  // kConstant
  int index = -1;      // kVariable: coordinate index
  std::string name;    // kVariable, kParameter, kCall
  Function function = Function::kSin;
  std::vector<std::shared_ptr<const Node>> children;
};

using NodePtr = std::shared_ptr<const Node>;

/// Raised at evaluation time for a parameter missing from the table.
class UnboundParameter : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Immutable expression tree over the coordinates of a Lagrangian space
/// (t, q, v, s) or, when p-variables are allowed, of the Pontryagin space.
class Expr {
 public:
  Expr(NodePtr root, jets::CoordinateSpace space) : root_(std::move(root)), space_(space) {}

  const Node& root() const { return *root_; }
  const NodePtr& root_ptr() const { return root_; }
  const jets::CoordinateSpace& space() const { return space_; }
  int n() const { return space_.n(); }

  /// Names of the parameters the expression references, sorted and unique.
  std::vector<std::string> parameters() const;

  /// Jet of the expression given jets of every coordinate of space().
  jets::Jet evaluate(std::span<const jets::Jet> coords, const ParamTable& params) const;
  /// Convenience: seeds coordinate jets at `point` and evaluates.
  jets::Jet evaluate(std::span<const double> point, const ParamTable& params, int order) const;

  /// Field on space() with the parameters bound.
  jets::ScalarField field(ParamTable params) const;

  /// Text that reparses to a structurally identical tree.
  std::string to_string() const;

  friend bool operator==(const Expr& a, const Expr& b);

 private:
  NodePtr root_;
  jets::CoordinateSpace space_;
};

bool structurally_equal(const Node& a, const Node& b);

const char* function_name(Function f);

}  // namespace cocontact::dsl
