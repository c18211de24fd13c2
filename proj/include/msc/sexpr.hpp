#pragma once

#include <memory>
#include <string>
#include <vector>

#include "msc/error.hpp"

namespace msc {

// Minimal s-expression reader shared by the formula parsers.
// Atoms are bare tokens; ';' starts a comment until end of line.
struct Sexpr {
  bool is_atom = false;
  std::string atom;
  std::vector<Sexpr> items;
  int line = 1;
  int column = 1;

  bool is_list() const { return !is_atom; }
  const Sexpr& at(size_t i) const { return items.at(i); }
  size_t size() const { return items.size(); }

  // Head atom of a list, or the atom itself.
  const std::string& head() const {
    if (is_atom) return atom;
    if (items.empty() || !items[0].is_atom)
      throw SyntaxError("expected an operator atom", line, column);
    return items[0].atom;
  }
};

Sexpr parse_sexpr(const std::string& text);
std::string print_sexpr(const Sexpr& s);

}  // namespace msc
