#include "cocontact/dsl/expr.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

namespace cocontact::dsl {

using jets::Jet;

const char* function_name(Function f) {
  switch (f) {
    case Function::kSin: return "sin";
    case Function::kCos: return "cos";
    case Function::kExp: return "exp";
    case Function::kLn: return "ln";
    case Function::kSqrt: return "sqrt";
    case Function::kPow: return "pow";
  }
  return "?";
}

namespace {

// Exponent known at parse time: a constant, possibly negated.
bool constant_value(const Node& node, double& out) {
  if (node.kind == NodeKind::kConstant) {
    out = node.value;
    return true;
  }
  if (node.kind == NodeKind::kNegate && constant_value(*node.children[0], out)) {
    out = -out;
    return true;
  }
  return false;
}

Jet power(const Jet& base, const Node& exponent, const Jet& exponent_jet) {
  double c = 0.0;
  if (constant_value(exponent, c)) {
    if (std::nearbyint(c) == c && std::abs(c) <= 1024.0) return pow(base, static_cast<int>(c));
    return pow(base, c);
  }
  return pow(base, exponent_jet);
}

Jet eval(const Node& node, std::span<const Jet> coords, const ParamTable& params) {
  switch (node.kind) {
    case NodeKind::kConstant: return Jet(node.value);
    case NodeKind::kVariable: return coords[static_cast<std::size_t>(node.index)];
    case NodeKind::kParameter: {
      const auto v = params.find(node.name);
      if (!v) throw UnboundParameter("parameter '" + node.name + "' has no value");
      return Jet(*v);
    }
    case NodeKind::kNegate: return -eval(*node.children[0], coords, params);
    case NodeKind::kAdd: return eval(*node.children[0], coords, params) + eval(*node.children[1], coords, params);
    case NodeKind::kSub: return eval(*node.children[0], coords, params) - eval(*node.children[1], coords, params);
    case NodeKind::kMul: return eval(*node.children[0], coords, params) * eval(*node.children[1], coords, params);
    case NodeKind::kDiv: return eval(*node.children[0], coords, params) / eval(*node.children[1], coords, params);
    case NodeKind::kPow: {
      const Jet base = eval(*node.children[0], coords, params);
      double c = 0.0;
      if (constant_value(*node.children[1], c)) return power(base, *node.children[1], Jet(c));
      return power(base, *node.children[1], eval(*node.children[1], coords, params));
    }
    case NodeKind::kCall: {
      const Jet a = eval(*node.children[0], coords, params);
      switch (node.function) {
        case Function::kSin: return sin(a);
        case Function::kCos: return cos(a);
        case Function::kExp: return exp(a);
        case Function::kLn: return log(a);
        case Function::kSqrt: return sqrt(a);
        case Function::kPow: {
          double c = 0.0;
          if (constant_value(*node.children[1], c)) return power(a, *node.children[1], Jet(c));
          return power(a, *node.children[1], eval(*node.children[1], coords, params));
        }
      }
    }
  }
  throw std::logic_error("corrupt expression node");
}

void collect_parameters(const Node& node, std::set<std::string>& out) {
  if (node.kind == NodeKind::kParameter) out.insert(node.name);
  for (const auto& child : node.children) collect_parameters(*child, out);
}

// Binding strength used to decide where parentheses are required.
int precedence(const Node& node) {
  switch (node.kind) {
    case NodeKind::kAdd:
    case NodeKind::kSub: return 1;
    case NodeKind::kMul:
    case NodeKind::kDiv: return 2;
    case NodeKind::kNegate: return 3;
    case NodeKind::kPow: return 4;
    case NodeKind::kConstant: return node.value < 0.0 || std::signbit(node.value) ? 3 : 5;
    default: return 5;
  }
}

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void print(const Node& node, std::string& out);

void print_child(const Node& child, bool parens, std::string& out) {
  if (parens) out += '(';
  print(child, out);
  if (parens) out += ')';
}

void print(const Node& node, std::string& out) {
  switch (node.kind) {
    case NodeKind::kConstant:
      if (std::signbit(node.value)) {
        out += '-';
        out += number(-node.value);
      } else {
        out += number(node.value);
      }
      return;
    case NodeKind::kVariable:
    case NodeKind::kParameter: out += node.name; return;
    case NodeKind::kNegate:
      out += '-';
      print_child(*node.children[0], precedence(*node.children[0]) < 3, out);
      return;
    case NodeKind::kAdd:
    case NodeKind::kSub:
    case NodeKind::kMul:
    case NodeKind::kDiv: {
      const int p = precedence(node);
      const char* op = node.kind == NodeKind::kAdd   ? " + "
                       : node.kind == NodeKind::kSub ? " - "
                       : node.kind == NodeKind::kMul ? "*"
                                                     : "/";
      print_child(*node.children[0], precedence(*node.children[0]) < p, out);
      out += op;
      print_child(*node.children[1], precedence(*node.children[1]) <= p, out);
      return;
    }
    case NodeKind::kPow:
      print_child(*node.children[0], precedence(*node.children[0]) < 5, out);
      out += '^';
      print_child(*node.children[1], precedence(*node.children[1]) < 3, out);
      return;
    case NodeKind::kCall:
      out += function_name(node.function);
      out += '(';
      for (std::size_t i = 0; i < node.children.size(); ++i) {
        if (i) out += ", ";
        print(*node.children[i], out);
      }
      out += ')';
      return;
  }
}

}  // namespace

std::vector<std::string> Expr::parameters() const {
  std::set<std::string> names;
  collect_parameters(*root_, names);
  return {names.begin(), names.end()};
}

Jet Expr::evaluate(std::span<const Jet> coords, const ParamTable& params) const {
  if (static_cast<int>(coords.size()) != space_.dim())
    throw std::invalid_argument("expression expects " + std::to_string(space_.dim()) + " coordinates, got " +
                                std::to_string(coords.size()));
  return eval(*root_, coords, params);
}

Jet Expr::evaluate(std::span<const double> point, const ParamTable& params, int order) const {
  if (static_cast<int>(point.size()) != space_.dim())
    throw std::invalid_argument("expression expects " + std::to_string(space_.dim()) + " coordinates, got " +
                                std::to_string(point.size()));
  return jets::eval_jet([&](std::span<const Jet> x) { return eval(*root_, x, params); }, point, order);
}

jets::ScalarField Expr::field(ParamTable params) const {
  for (const auto& name : parameters())
    if (!params.contains(name)) throw UnboundParameter("parameter '" + name + "' has no value");
  return [root = root_, params = std::move(params)](std::span<const Jet> x) { return eval(*root, x, params); };
}

std::string Expr::to_string() const {
  std::string out;
  print(*root_, out);
  return out;
}

bool structurally_equal(const Node& a, const Node& b) {
  if (a.kind != b.kind || a.children.size() != b.children.size()) return false;
  switch (a.kind) {
    case NodeKind::kConstant:
      if (!(a.value == b.value) || std::signbit(a.value) != std::signbit(b.value)) return false;
      break;
    case NodeKind::kVariable:
      if (a.index != b.index || a.name != b.name) return false;
      break;
    case NodeKind::kParameter:
      if (a.name != b.name) return false;
      break;
    case NodeKind::kCall:
      if (a.function != b.function) return false;
      break;
    default: break;
  }
  for (std::size_t i = 0; i < a.children.size(); ++i)
    if (!structurally_equal(*a.children[i], *b.children[i])) return false;
  return true;
}

bool operator==(const Expr& a, const Expr& b) {
  return a.space_.kind() == b.space_.kind() && a.space_.n() == b.space_.n() && structurally_equal(*a.root_, *b.root_);
}

}  // namespace cocontact::dsl
