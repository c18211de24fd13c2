#include "msc/sexpr.hpp"

#include <cctype>

namespace msc {

namespace {

struct Cursor {
  const std::string& text;
  size_t pos = 0;
  int line = 1;
  int column = 1;

  bool done() const { return pos >= text.size(); }
  char peek() const { return text[pos]; }
  void advance() {
    if (text[pos] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
    ++pos;
  }
  void skip_space() {
    while (!done()) {
      char c = peek();
      if (c == ';') {
        while (!done() && peek() != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }
};

bool atom_char(char c) {
  return !std::isspace(static_cast<unsigned char>(c)) && c != '(' && c != ')' && c != ';';
}

Sexpr parse_node(Cursor& cur) {
  cur.skip_space();
  if (cur.done()) throw SyntaxError("unexpected end of input", cur.line, cur.column);
  Sexpr node;
  node.line = cur.line;
  node.column = cur.column;
  if (cur.peek() == '(') {
    cur.advance();
    while (true) {
      cur.skip_space();
      if (cur.done()) throw SyntaxError("missing ')'", node.line, node.column);
      if (cur.peek() == ')') {
        cur.advance();
        break;
      }
      node.items.push_back(parse_node(cur));
    }
    return node;
  }
  if (cur.peek() == ')') throw SyntaxError("unexpected ')'", cur.line, cur.column);
  node.is_atom = true;
  while (!cur.done() && atom_char(cur.peek())) {
    node.atom.push_back(cur.peek());
    cur.advance();
  }
  return node;
}

}  // namespace

Sexpr parse_sexpr(const std::string& text) {
  Cursor cur{text};
  Sexpr node = parse_node(cur);
  cur.skip_space();
  if (!cur.done()) throw SyntaxError("trailing input after expression", cur.line, cur.column);
  return node;
}

std::string print_sexpr(const Sexpr& s) {
  if (s.is_atom) return s.atom;
  std::string out = "(";
  for (size_t i = 0; i < s.items.size(); ++i) {
    if (i) out += ' ';
    out += print_sexpr(s.items[i]);
  }
  out += ')';
  return out;
}

}  // namespace msc
