#pragma once

#include <map>
#include <string>
#include <vector>

#include "hcsp/ast.hpp"

namespace hcsp {

struct ParseError : std::runtime_error {
  int line = 0, col = 0;
  ParseError(const std::string& msg, int line_, int col_)
      : std::runtime_error("line " + std::to_string(line_) + ":" +
                           std::to_string(col_) + ": " + msg),
        line(line_),
        col(col_) {}
};

/// A parsed model file: named process definitions, the distinguished
/// system process, initial valuation, and per-ODE stability data.
struct Model {
  Valuation init;
  std::map<std::string, double> consts;
  std::map<std::string, StabilityCert> certs;  // keyed by ODE label
  std::map<std::string, TermPtr> defs;
  TermPtr system;
  std::vector<std::string> warnings;
};

/// Parse a single process term (no directives, no definitions).
TermPtr parse_term(const std::string& src);

/// Parse a boolean / arithmetic expression.
BoolPtr parse_bool(const std::string& src);
ExprPtr parse_expr(const std::string& src);

/// Parse a full model file.
Model parse_model(const std::string& src,
                  const std::map<std::string, double>& overrides = {});
Model parse_model_file(const std::string& path,
                       const std::map<std::string, double>& overrides = {});

}  // namespace hcsp
