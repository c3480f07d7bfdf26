#include "lexer.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>

namespace llmdrive::parse::detail {

namespace {

struct UnitSpelling {
  std::string_view text;
  Unit unit;
};

// Longest spellings first so "m/s²" wins over "m/s" and "meters" over "m".
constexpr std::array<UnitSpelling, 27> kUnits{{
    {"kilometers per hour", Unit::kmh},
    {"kilometres per hour", Unit::kmh},
    {"km/hr", Unit::kmh},
    {"km/h", Unit::kmh},
    {"kmph", Unit::kmh},
    {"kph", Unit::kmh},
    {"kmh", Unit::kmh},
    {"meters per second squared", Unit::ms2},
    {"metres per second squared", Unit::ms2},
    {"m/s\xC2\xB2", Unit::ms2},
    {"m/s^2", Unit::ms2},
    {"m/s/s", Unit::ms2},
    {"m/s2", Unit::ms2},
    {"meters per second", Unit::ms},
    {"metres per second", Unit::ms},
    {"m/s", Unit::ms},
    {"mps", Unit::ms},
    {"meters", Unit::m},
    {"metres", Unit::m},
    {"meter", Unit::m},
    {"metre", Unit::m},
    {"m", Unit::m},
    {"seconds", Unit::s},
    {"second", Unit::s},
    {"secs", Unit::s},
    {"sec", Unit::s},
    {"s", Unit::s},
}};

bool is_word_char(unsigned char c) { return std::isalnum(c) || c == '_'; }

bool starts_with_ci(std::string_view text, std::size_t pos, std::string_view prefix) {
  if (pos + prefix.size() > text.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    const auto a = static_cast<unsigned char>(text[pos + i]);
    const auto b = static_cast<unsigned char>(prefix[i]);
    if (std::tolower(a) != std::tolower(b)) return false;
  }
  return true;
}

bool at(std::string_view text, std::size_t pos, std::string_view s) {
  return text.substr(pos, s.size()) == s;
}

// Length of a UTF-8 sequence starting with lead byte `c` (1 for invalid bytes).
std::size_t utf8_len(unsigned char c) {
  if (c >= 0xF0 && c <= 0xF4) return 4;
  if (c >= 0xE0) return 3;
  if (c >= 0xC2 && c < 0xE0) return 2;
  return 1;
}

// Subscript digits ₀..₉ are E2 82 80..89.
bool subscript_digit_at(std::string_view text, std::size_t pos, char* ascii) {
  if (pos + 2 < text.size() && static_cast<unsigned char>(text[pos]) == 0xE2 &&
      static_cast<unsigned char>(text[pos + 1]) == 0x82) {
    const auto c = static_cast<unsigned char>(text[pos + 2]);
    if (c >= 0x80 && c <= 0x89) {
      *ascii = static_cast<char>('0' + (c - 0x80));
      return true;
    }
  }
  return false;
}

const Token* last_significant(const std::vector<Token>& toks) {
  for (auto it = toks.rbegin(); it != toks.rend(); ++it) {
    if (!it->is(Tok::newline)) return &*it;
  }
  return nullptr;
}

}  // namespace

std::optional<std::pair<Unit, std::size_t>> match_unit(std::string_view text, std::size_t pos) {
  for (const auto& u : kUnits) {
    if (!starts_with_ci(text, pos, u.text)) continue;
    const std::size_t end = pos + u.text.size();
    const auto last = static_cast<unsigned char>(u.text.back());
    if (is_word_char(last) && end < text.size() && is_word_char(static_cast<unsigned char>(text[end]))) {
      continue;
    }
    return std::pair{u.unit, end};
  }
  return std::nullopt;
}

std::vector<Token> lex(std::string_view text) {
  std::vector<Token> toks;
  const std::size_t n = text.size();
  std::size_t i = 0;

  auto push = [&toks](Tok type, std::size_t b, std::size_t e, std::string t = {}) {
    Token tok;
    tok.type = type;
    tok.begin = b;
    tok.end = e;
    tok.unit_end = e;
    tok.text = std::move(t);
    toks.push_back(std::move(tok));
  };

  while (i < n) {
    const auto c = static_cast<unsigned char>(text[i]);

    if (c == '\n') {
      push(Tok::newline, i, i + 1);
      ++i;
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v') {
      ++i;
      continue;
    }

    // Emphasis markers vs. multiplication.
    if (c == '*') {
      std::size_t run = 1;
      while (i + run < n && text[i + run] == '*') ++run;
      if (run == 1) {
        const bool space_before = i > 0 && (text[i - 1] == ' ' || text[i - 1] == '\t');
        const bool space_after = i + 1 < n && (text[i + 1] == ' ' || text[i + 1] == '\t');
        const bool digit_before = i > 0 && (std::isdigit(static_cast<unsigned char>(text[i - 1])) || text[i - 1] == ')');
        const bool digit_after = i + 1 < n && (std::isdigit(static_cast<unsigned char>(text[i + 1])) || text[i + 1] == '(');
        if ((space_before && space_after) || digit_before || digit_after) {
          push(Tok::op, i, i + 1, "mul");
          ++i;
          continue;
        }
      }
      i += run;
      continue;
    }
    if (c == '_' && i + 1 < n && text[i + 1] == '_') {
      i += 2;
      continue;
    }

    if (std::isdigit(c)) {
      std::size_t j = i;
      while (j < n && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
      if (j + 1 < n && text[j] == '.' && std::isdigit(static_cast<unsigned char>(text[j + 1]))) {
        ++j;
        while (j < n && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
      }
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(text.data() + i, text.data() + j, value);
      if (ec != std::errc{} || ptr != text.data() + j || !std::isfinite(value)) {
        push(Tok::word, i, j, std::string(text.substr(i, j - i)));
        i = j;
        continue;
      }
      std::size_t begin = i;
      // Fold an adjacent minus sign into the literal when it cannot be binary.
      if (!toks.empty() && toks.back().is_op("-") && toks.back().end == i) {
        const Token minus = toks.back();
        toks.pop_back();
        const Token* prev = last_significant(toks);
        const bool binary = prev && (prev->is(Tok::number) || prev->is(Tok::rparen) || prev->is(Tok::rbracket) ||
                                     (prev->is(Tok::word) && prev->end == minus.begin));
        if (binary) {
          toks.push_back(minus);
        } else {
          begin = minus.begin;
          value = -value;
        }
      }
      Token tok;
      tok.type = Tok::number;
      tok.begin = begin;
      tok.end = j;
      tok.value = value;
      tok.unit_end = j;
      std::size_t k = j;
      while (k < n && (text[k] == ' ' || text[k] == '\t')) ++k;
      if (auto u = match_unit(text, k)) {
        tok.unit = u->first;
        tok.unit_end = u->second;
        i = u->second;
      } else {
        i = j;
      }
      toks.push_back(std::move(tok));
      continue;
    }

    if (std::isalpha(c) || c == '_') {
      std::size_t j = i;
      std::string word;
      while (j < n) {
        const auto d = static_cast<unsigned char>(text[j]);
        char sub = 0;
        if (is_word_char(d) || d == '\'') {
          word.push_back(static_cast<char>(std::tolower(d)));
          ++j;
        } else if (subscript_digit_at(text, j, &sub)) {
          word.push_back(sub);
          j += 3;
        } else if (d == '{' && !word.empty() && word.back() == '_') {
          // v_{1}
          std::size_t k = j + 1;
          while (k < n && std::isdigit(static_cast<unsigned char>(text[k]))) ++k;
          if (k > j + 1 && k < n && text[k] == '}') {
            word.append(text.substr(j + 1, k - j - 1));
            j = k + 1;
          } else {
            break;
          }
        } else {
          break;
        }
      }
      while (!word.empty() && word.back() == '\'') {
        word.pop_back();
        --j;
      }
      push(Tok::word, i, j, std::move(word));
      i = j;
      continue;
    }

    if (c == '-' && i + 1 < n && text[i + 1] == '>') { push(Tok::op, i, i + 2, "arrow"); i += 2; continue; }
    if (c == '=' && i + 1 < n && text[i + 1] == '>') { push(Tok::op, i, i + 2, "arrow"); i += 2; continue; }
    if (c == '~' && i + 1 < n && text[i + 1] == '=') { push(Tok::eq, i, i + 2); i += 2; continue; }

    switch (c) {
      case '=':
        push(Tok::eq, i, i + 1);
        ++i;
        while (i < n && text[i] == '=') ++i;
        continue;
      case '+': push(Tok::op, i, i + 1, "+"); ++i; continue;
      case '-': push(Tok::op, i, i + 1, "-"); ++i; continue;
      case '/': push(Tok::op, i, i + 1, "div"); ++i; continue;
      case '(': push(Tok::lparen, i, i + 1); ++i; continue;
      case ')': push(Tok::rparen, i, i + 1); ++i; continue;
      case '[': push(Tok::lbracket, i, i + 1); ++i; continue;
      case ']': push(Tok::rbracket, i, i + 1); ++i; continue;
      case ',': push(Tok::comma, i, i + 1); ++i; continue;
      case ';': push(Tok::semicolon, i, i + 1); ++i; continue;
      case ':': push(Tok::colon, i, i + 1); ++i; continue;
      case '|': push(Tok::pipe, i, i + 1); ++i; continue;
      case '.':
      case '?':
      case '!': {
        const bool end_follows = i + 1 >= n || std::isspace(static_cast<unsigned char>(text[i + 1]));
        const bool ellipsis = (i > 0 && text[i - 1] == '.') || (i + 1 < n && text[i + 1] == '.');
        if (end_follows && !ellipsis) push(Tok::period, i, i + 1);
        ++i;
        continue;
      }
      default: break;
    }

    // Multi-byte symbols.
    if (at(text, i, "\xC3\x97") || at(text, i, "\xC2\xB7")) { push(Tok::op, i, i + 2, "mul"); i += 2; continue; }
    if (at(text, i, "\xE2\x8B\x85") || at(text, i, "\xE2\x88\x99")) { push(Tok::op, i, i + 3, "mul"); i += 3; continue; }
    if (at(text, i, "\xC3\xB7")) { push(Tok::op, i, i + 2, "div"); i += 2; continue; }
    if (at(text, i, "\xE2\x88\x92")) { push(Tok::op, i, i + 3, "-"); i += 3; continue; }
    if (at(text, i, "\xE2\x86\x92")) { push(Tok::op, i, i + 3, "arrow"); i += 3; continue; }
    if (at(text, i, "\xE2\x89\x88") || at(text, i, "\xE2\x89\x83")) { push(Tok::eq, i, i + 3); i += 3; continue; }

    i += utf8_len(c);
  }

  // "40 x 0.277778": a lone x between numbers is multiplication.
  for (std::size_t k = 1; k + 1 < toks.size(); ++k) {
    if (toks[k].is_word("x") && toks[k - 1].is(Tok::number) && toks[k + 1].is(Tok::number)) {
      toks[k].type = Tok::op;
      toks[k].text = "mul";
    }
  }
  return toks;
}

}  // namespace llmdrive::parse::detail
