#pragma once

#include <variant>
#include <vector>

#include "difactor/expr.hpp"

namespace difactor::detail {

struct Node {
  NodeKind kind = NodeKind::Const;
  bool canonical = false;
  std::size_t hash = 0;
  std::variant<std::monostate, Rational, VarId, Symbol, FunKind, long> data;
  std::vector<Expr> args;
};

/// Builds a node, computing its hash.
Expr make(NodeKind kind, std::variant<std::monostate, Rational, VarId, Symbol, FunKind, long> data,
          std::vector<Expr> args, bool canonical);

}  // namespace difactor::detail
