#include "cocontact/dsl/parser.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <numbers>

namespace cocontact::dsl {

ParseError::ParseError(Kind kind, std::size_t offset, const std::string& message)
    : std::runtime_error(std::string(dsl::to_string(kind)) + " at offset " + std::to_string(offset) + ": " + message),
      kind_(kind),
      offset_(offset) {}

const char* to_string(ParseError::Kind kind) {
  switch (kind) {
    case ParseError::Kind::kSyntax: return "syntax error";
    case ParseError::Kind::kUnknownIdentifier: return "unknown identifier";
    case ParseError::Kind::kArity: return "wrong number of arguments";
    case ParseError::Kind::kForbiddenVariable: return "forbidden variable";
  }
  return "parse error";
}

namespace {

constexpr int kMaxDepth = 200;

struct FunctionInfo {
  std::string_view name;
  Function function;
  int arity;
};

constexpr FunctionInfo kFunctions[] = {
    {"sin", Function::kSin, 1}, {"cos", Function::kCos, 1},   {"exp", Function::kExp, 1},
    {"ln", Function::kLn, 1},   {"sqrt", Function::kSqrt, 1}, {"pow", Function::kPow, 2},
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool digit(char c) { return c >= '0' && c <= '9'; }

class Parser {
 public:
  Parser(std::string_view text, const ParseOptions& options)
      : text_(text),
        options_(options),
        space_(options.allow_p ? jets::SpaceKind::kPontryagin : jets::SpaceKind::kLagrangian, options.n),
        end_(text.size()) {
    while (end_ > 0 && std::isspace(static_cast<unsigned char>(text_[end_ - 1]))) --end_;
  }

  Expr run() {
    skip_space();
    if (pos_ >= end_) fail(ParseError::Kind::kSyntax, "empty expression");
    NodePtr root = expr();
    skip_space();
    if (pos_ < end_) fail(ParseError::Kind::kSyntax, "unexpected '" + std::string(1, text_[pos_]) + "'");
    return Expr(std::move(root), space_);
  }

 private:
  [[noreturn]] void fail(ParseError::Kind kind, const std::string& message) const {
    throw ParseError(kind, std::min(pos_, end_), message);
  }
  [[noreturn]] void fail_at(std::size_t offset, ParseError::Kind kind, const std::string& message) const {
    throw ParseError(kind, offset, message);
  }

  void skip_space() {
    while (pos_ < end_ && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < end_ && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      if (pos_ >= end_) fail(ParseError::Kind::kSyntax, std::string("expected '") + c + "' before end of input");
      fail(ParseError::Kind::kSyntax, std::string("expected '") + c + "'");
    }
  }

  static NodePtr make(NodeKind kind, std::vector<NodePtr> children) {
    auto node = std::make_shared<Node>();
    node->kind = kind;
    node->children = std::move(children);
    return node;
  }

  struct DepthGuard {
    explicit DepthGuard(Parser& p) : parser(p) {
      if (++parser.depth_ > kMaxDepth) parser.fail(ParseError::Kind::kSyntax, "expression nested too deeply");
    }
    ~DepthGuard() { --parser.depth_; }
    Parser& parser;
  };

  NodePtr expr() {
    DepthGuard guard(*this);
    NodePtr left = term();
    for (;;) {
      if (accept('+')) {
        left = make(NodeKind::kAdd, {left, term()});
      } else if (accept('-')) {
        left = make(NodeKind::kSub, {left, term()});
      } else {
        return left;
      }
    }
  }

  NodePtr term() {
    NodePtr left = unary();
    for (;;) {
      if (accept('*')) {
        left = make(NodeKind::kMul, {left, unary()});
      } else if (accept('/')) {
        left = make(NodeKind::kDiv, {left, unary()});
      } else {
        return left;
      }
    }
  }

  NodePtr unary() {
    DepthGuard guard(*this);
    if (accept('-')) return make(NodeKind::kNegate, {unary()});
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (accept('^')) return make(NodeKind::kPow, {base, unary()});
    return base;
  }

  NodePtr primary() {
    skip_space();
    if (pos_ >= end_) fail(ParseError::Kind::kSyntax, "unexpected end of input");
    const char c = text_[pos_];
    if (digit(c) || c == '.') return number();
    if (ident_start(c)) return identifier();
    if (accept('(')) {
      NodePtr inner = expr();
      expect(')');
      return inner;
    }
    fail(ParseError::Kind::kSyntax, "unexpected '" + std::string(1, c) + "'");
  }

  NodePtr number() {
    const std::size_t start = pos_;
    while (pos_ < end_ && digit(text_[pos_])) ++pos_;
    if (pos_ < end_ && text_[pos_] == '.') {
      ++pos_;
      while (pos_ < end_ && digit(text_[pos_])) ++pos_;
    }
    if (pos_ - start == 1 && text_[start] == '.') fail_at(start, ParseError::Kind::kSyntax, "malformed number");
    if (pos_ < end_ && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < end_ && (text_[p] == '+' || text_[p] == '-')) ++p;
      if (p >= end_ || !digit(text_[p])) fail_at(p, ParseError::Kind::kSyntax, "malformed exponent");
      while (p < end_ && digit(text_[p])) ++p;
      pos_ = p;
    }
    double value = 0.0;
    const char* first = text_.data() + start;
    const char* last = text_.data() + pos_;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec == std::errc::result_out_of_range) {
      // Underflow to zero is harmless; overflow is not a finite constant.
      if (std::strtod(std::string(first, last).c_str(), nullptr) != 0.0)
        fail_at(start, ParseError::Kind::kSyntax, "number out of range");
      value = 0.0;
    } else if (ec != std::errc() || ptr != last) {
      fail_at(start, ParseError::Kind::kSyntax, "malformed number");
    }
    auto node = std::make_shared<Node>();
    node->kind = NodeKind::kConstant;
    node->value = value;
    return node;
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < end_ && ident_char(text_[pos_])) ++pos_;
    const std::string name(text_.substr(start, pos_ - start));

    skip_space();
    if (pos_ < end_ && text_[pos_] == '(') return call(name, start);

    if (name == "pi") {
      auto node = std::make_shared<Node>();
      node->kind = NodeKind::kConstant;
      node->value = std::numbers::pi;
      return node;
    }
    if (auto index = space_.index_of(name)) {
      auto node = std::make_shared<Node>();
      node->kind = NodeKind::kVariable;
      node->index = *index;
      node->name = name;
      return node;
    }
    if (coordinate_like(name)) {
      if (name[0] == 'p' && !options_.allow_p && jets::CoordinateSpace(jets::SpaceKind::kPontryagin, options_.n)
                                                     .index_of(name)
                                                     .has_value())
        fail_at(start, ParseError::Kind::kForbiddenVariable, "momentum '" + name + "' is not allowed here");
      fail_at(start, ParseError::Kind::kUnknownIdentifier,
              "'" + name + "' is not a coordinate of a system with n = " + std::to_string(options_.n));
    }
    for (const auto& f : kFunctions)
      if (f.name == name) fail_at(start, ParseError::Kind::kSyntax, "function '" + name + "' needs arguments");
    if (options_.params && !options_.params->contains(name))
      fail_at(start, ParseError::Kind::kUnknownIdentifier, "unknown identifier '" + name + "'");
    auto node = std::make_shared<Node>();
    node->kind = NodeKind::kParameter;
    node->name = name;
    return node;
  }

  // q7, v12, p3: reserved even when out of range for this n.
  static bool coordinate_like(const std::string& name) {
    if (name.size() < 2 || (name[0] != 'q' && name[0] != 'v' && name[0] != 'p')) return false;
    for (std::size_t i = 1; i < name.size(); ++i)
      if (!digit(name[i])) return false;
    return true;
  }

  NodePtr call(const std::string& name, std::size_t start) {
    const FunctionInfo* info = nullptr;
    for (const auto& f : kFunctions)
      if (f.name == name) info = &f;
    if (!info) fail_at(start, ParseError::Kind::kUnknownIdentifier, "unknown function '" + name + "'");
    expect('(');
    std::vector<NodePtr> args;
    if (!accept(')')) {
      do args.push_back(expr());
      while (accept(','));
      expect(')');
    }
    if (static_cast<int>(args.size()) != info->arity)
      fail_at(start, ParseError::Kind::kArity,
              name + " takes " + std::to_string(info->arity) + " argument(s), got " + std::to_string(args.size()));
    auto node = std::make_shared<Node>();
    node->kind = NodeKind::kCall;
    node->function = info->function;
    node->name = name;
    node->children = std::move(args);
    return node;
  }

  std::string_view text_;
  const ParseOptions& options_;
  jets::CoordinateSpace space_;
  std::size_t pos_ = 0;
  std::size_t end_;
  int depth_ = 0;
};

}  // namespace

Expr parse(std::string_view text, const ParseOptions& options) {
  if (options.n < 1) throw std::invalid_argument("dimension must be positive");
  return Parser(text, options).run();
}

}  // namespace cocontact::dsl
