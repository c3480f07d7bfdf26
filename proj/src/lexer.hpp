#pragma once

// Token stream over model reply text. Internal to the parser.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "llmdrive/quantity.hpp"

namespace llmdrive::parse::detail {

enum class Tok {
  number,
  word,
  eq,      // = ≈ ≃
  op,      // text: "mul", "div", "+", "-", "arrow"
  lparen,
  rparen,
  lbracket,
  rbracket,
  comma,
  semicolon,
  colon,
  period,  // sentence end: . ? ! followed by whitespace or end of text
  pipe,
  newline,
};

struct Token {
  Tok type = Tok::word;
  std::size_t begin = 0;
  std::size_t end = 0;  // numbers: end of the numeral, excluding the unit
  std::string text;     // words: lowercased; ops: canonical name
  double value = 0.0;
  std::optional<Unit> unit;
  std::size_t unit_end = 0;  // end of the unit when present, else == end

  bool is(Tok t) const noexcept { return type == t; }
  bool is_op(std::string_view name) const noexcept { return type == Tok::op && text == name; }
  bool is_word(std::string_view w) const noexcept { return type == Tok::word && text == w; }
  std::size_t full_end() const noexcept { return unit ? unit_end : end; }
};

std::vector<Token> lex(std::string_view text);

/// Matches a unit spelling at `pos`; returns the unit and the end offset.
std::optional<std::pair<Unit, std::size_t>> match_unit(std::string_view text, std::size_t pos);

}  // namespace llmdrive::parse::detail
