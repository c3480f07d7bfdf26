#include "llmdrive/parser.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "lexer.hpp"
#include "llmdrive/error.hpp"

namespace llmdrive::parse {

using detail::Tok;
using detail::Token;

std::string_view to_string(SpeedInterpretation i) noexcept {
  switch (i) {
    case SpeedInterpretation::throttle_fraction: return "throttle_fraction";
    case SpeedInterpretation::target_speed_kmh: return "target_speed_kmh";
    case SpeedInterpretation::ambiguous: return "ambiguous";
  }
  return "ambiguous";
}

std::string_view to_string(ClaimKind k) noexcept {
  switch (k) {
    case ClaimKind::conversion: return "conversion";
    case ClaimKind::deceleration: return "deceleration";
    case ClaimKind::speed_at_time: return "speed_at_time";
    case ClaimKind::brake_value: return "brake_value";
    case ClaimKind::distance: return "distance";
    case ClaimKind::duration: return "duration";
  }
  return "conversion";
}

namespace {

std::string_view role_name(DistanceRole r) {
  switch (r) {
    case DistanceRole::detection: return "detection";
    case DistanceRole::stopping: return "stopping";
    case DistanceRole::following: return "following";
  }
  return "detection";
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; }

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

// ---------------------------------------------------------------------------
// Control lists

bool ieq(char a, char b) {
  return std::tolower(static_cast<unsigned char>(a)) == std::tolower(static_cast<unsigned char>(b));
}

bool match_ci(std::string_view text, std::size_t pos, std::string_view word) {
  if (pos + word.size() > text.size()) return false;
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (!ieq(text[pos + i], word[i])) return false;
  }
  return true;
}

bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

struct NameHit {
  std::size_t begin;
  std::size_t end;
  bool brake;
};

// SPEED_LIST, SPEED_CONTROL, BRAKE_LIST, BRAKE_CONTROL (also without the underscore).
std::optional<NameHit> match_list_name(std::string_view text, std::size_t pos) {
  if (pos > 0 && ident_char(text[pos - 1])) return std::nullopt;
  bool brake = false;
  std::size_t p = pos;
  if (match_ci(text, p, "speed")) {
    p += 5;
  } else if (match_ci(text, p, "brake")) {
    p += 5;
    brake = true;
  } else {
    return std::nullopt;
  }
  if (p < text.size() && text[p] == '\\') ++p;  // SPEED\_LIST from markdown escapes
  if (p < text.size() && text[p] == '_') ++p;
  if (match_ci(text, p, "list")) {
    p += 4;
  } else if (match_ci(text, p, "control")) {
    p += 7;
  } else {
    return std::nullopt;
  }
  if (p < text.size() && ident_char(text[p])) return std::nullopt;
  // Require the conventional upper-case spelling; "speed list" in prose is not a name.
  for (std::size_t i = pos; i < p; ++i) {
    if (std::islower(static_cast<unsigned char>(text[i]))) return std::nullopt;
  }
  return NameHit{pos, p, brake};
}

constexpr std::size_t kBracketWindow = 120;

// Position of the '[' that opens this name's list, or npos for a mere mention.
std::size_t find_open_bracket(std::string_view text, std::size_t from) {
  const std::size_t limit = std::min(text.size(), from + kBracketWindow);
  for (std::size_t i = from; i < limit; ++i) {
    const char c = text[i];
    if (c == '[') return i;
    if (c == '\n' && i + 1 < text.size()) {
      std::size_t j = i + 1;
      while (j < text.size() && (text[j] == ' ' || text[j] == '\t' || text[j] == '\r')) ++j;
      if (j < text.size() && text[j] == '\n') return std::string_view::npos;
    }
    if ((c == '.' || c == '!' || c == '?') && (i + 1 >= text.size() || is_space(text[i + 1]))) {
      const bool ellipsis = i > 0 && text[i - 1] == '.';
      if (!ellipsis) return std::string_view::npos;
    }
    if (match_list_name(text, i)) return std::string_view::npos;
  }
  return std::string_view::npos;
}

bool parse_decimal(std::string_view s, double* out) {
  std::string buf;
  std::size_t i = 0;
  if (s.substr(0, 3) == "\xE2\x88\x92") {  // U+2212
    buf.push_back('-');
    i = 3;
  } else if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
    if (s[0] == '-') buf.push_back('-');
    i = 1;
  }
  const std::size_t digits_from = i;
  bool seen_digit = false;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
    buf.push_back(s[i++]);
    seen_digit = true;
  }
  if (i < s.size() && s[i] == '.') {
    buf.push_back(s[i++]);
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
      buf.push_back(s[i++]);
      seen_digit = true;
    }
  }
  if (!seen_digit || i == digits_from) return false;
  // Allow a trailing unit or percent sign after the numeral.
  std::size_t k = i;
  while (k < s.size() && (s[k] == ' ' || s[k] == '\t')) ++k;
  if (k < s.size()) {
    if (s.substr(k) == "%") {
    } else if (auto u = detail::match_unit(s, k); u && u->second == s.size()) {
    } else {
      return false;
    }
  }
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{} || ptr != buf.data() + buf.size() || !std::isfinite(v)) return false;
  *out = v;
  return true;
}

std::string strip_emphasis(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c != '*' && c != '`') out.push_back(c);
  }
  return out;
}

ControlList parse_list(std::string_view text, const NameHit& name, std::size_t open) {
  ControlList list;
  list.name = std::string(text.substr(name.begin, name.end - name.begin));
  list.name.erase(std::remove(list.name.begin(), list.name.end(), '\\'), list.name.end());
  std::size_t item_begin = open + 1;
  std::size_t i = open + 1;
  bool closed = false;
  auto take_item = [&](std::size_t end) {
    const std::string raw = trim(strip_emphasis(text.substr(item_begin, end - item_begin)));
    if (raw.empty()) {
      if (end < text.size() && text[end] == ',') {
        throw ParseError(list.name + ": empty list entry", static_cast<long>(item_begin));
      }
      return;  // "[]" or trailing comma before ']'
    }
    if (raw == "..." || raw == "\xE2\x80\xA6" || raw == "etc" || raw == "etc.") {
      list.truncated = true;
      return;
    }
    if (list.truncated) {
      throw ParseError(list.name + ": entry after ellipsis", static_cast<long>(item_begin));
    }
    double v = 0.0;
    if (!parse_decimal(raw, &v)) {
      throw ParseError(list.name + ": non-numeric entry '" + raw + "'", static_cast<long>(item_begin));
    }
    list.entries.push_back(v);
  };
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (c == ',') {
      take_item(i);
      item_begin = i + 1;
    } else if (c == ']') {
      take_item(i);
      closed = true;
      break;
    } else if (c == '[') {
      break;
    }
  }
  if (!closed) throw ParseError(list.name + ": missing ']'", static_cast<long>(open));
  list.span = Span{name.begin, i + 1};
  return list;
}

}  // namespace

SpeedInterpretation classify_speed_entries(std::span<const double> entries) {
  if (entries.empty()) throw ValidationError("cannot classify an empty speed list");
  const bool all_unit = std::all_of(entries.begin(), entries.end(), [](double v) { return v >= 0.0 && v <= 1.0; });
  if (all_unit) return SpeedInterpretation::throttle_fraction;
  const bool all_above = std::all_of(entries.begin(), entries.end(), [](double v) { return v > 1.0; });
  return all_above ? SpeedInterpretation::target_speed_kmh : SpeedInterpretation::ambiguous;
}

std::optional<ControlSchedule> extract_control_lists(std::string_view text) {
  ControlSchedule sched;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c != 'S' && c != 'B' && c != 's' && c != 'b') continue;
    auto hit = match_list_name(text, i);
    if (!hit) continue;
    const std::size_t open = find_open_bracket(text, hit->end);
    if (open == std::string_view::npos) {
      i = hit->end - 1;
      continue;
    }
    ControlList list = parse_list(text, *hit, open);
    i = list.span.end - 1;
    (hit->brake ? sched.brake : sched.speed) = std::move(list);
  }
  if (!sched.speed && !sched.brake) return std::nullopt;
  if (sched.speed && !sched.speed->entries.empty()) {
    sched.interpretation = classify_speed_entries(sched.speed->entries);
  }
  if (sched.brake) {
    for (std::size_t k = 0; k < sched.brake->entries.size(); ++k) {
      const double v = sched.brake->entries[k];
      if (v < 0.0 || v > 1.0) {
        sched.range_violations.push_back(sched.brake->name + "[" + std::to_string(k) + "] = " +
                                         std::to_string(v) + " outside [0, 1]");
      }
    }
  }
  return sched;
}

// ---------------------------------------------------------------------------
// Numeric claims

std::optional<Quantity> NumericClaim::input(Unit u) const {
  for (const auto& q : inputs) {
    if (q.unit == u) return q;
  }
  return std::nullopt;
}

double ClaimExtraction::coverage() const {
  if (tagged_numerals == 0) return 1.0;
  return static_cast<double>(claimed_numerals) / static_cast<double>(tagged_numerals);
}

std::optional<double> deceleration_in_effect(const std::vector<NumericClaim>& claims, std::size_t offset) {
  std::optional<double> found;
  std::size_t best_end = 0;
  for (const auto& c : claims) {
    if (c.kind != ClaimKind::deceleration || c.source_span.end > offset) continue;
    if (!found || c.source_span.end >= best_end) {
      found = std::fabs(c.claimed.value);
      best_end = c.source_span.end;
    }
  }
  return found;
}

namespace {

struct Range {
  std::size_t begin;  // index into Stmt::toks
  std::size_t end;
};

struct Stmt {
  std::vector<std::size_t> toks;  // indices into the token vector, newlines removed
};

class ClaimScanner {
 public:
  explicit ClaimScanner(std::string_view text) : text_(text), t_(detail::lex(text)) {
    mark_brackets();
    split_statements();
  }

  ClaimExtraction run() {
    for (const Stmt& s : stmts_) scan_statement(s);
    scan_tables();

    std::vector<std::size_t> order(out_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return anchor_[a] < anchor_[b]; });
    ClaimExtraction ex;
    std::vector<std::size_t> anchors;
    for (std::size_t i : order) {
      ex.claims.push_back(std::move(out_[i]));
      anchors.push_back(anchor_[i]);
    }
    // Later computations rely on the deceleration stated before them.
    std::vector<NumericClaim> decels;
    for (const auto& c : ex.claims) {
      if (c.kind == ClaimKind::deceleration) decels.push_back(c);
    }
    for (std::size_t i = 0; i < ex.claims.size(); ++i) {
      NumericClaim& c = ex.claims[i];
      const bool wants = c.kind == ClaimKind::speed_at_time || c.kind == ClaimKind::duration ||
                         (c.kind == ClaimKind::distance && c.distance_role == DistanceRole::stopping);
      if (!wants || c.input(Unit::ms2)) continue;
      if (auto a = deceleration_in_effect(decels, anchors[i])) c.inputs.push_back(Quantity::make(*a, Unit::ms2));
    }
    for (std::size_t k = 0; k < t_.size(); ++k) {
      if (t_[k].is(Tok::number) && t_[k].unit) ++ex.tagged_numerals;
    }
    ex.claimed_numerals = claimed_tokens_.size();
    return ex;
  }

 private:
  std::string_view text_;
  std::vector<Token> t_;
  std::vector<bool> in_brackets_;
  std::vector<Stmt> stmts_;
  std::set<std::size_t> used_;
  std::set<std::size_t> claimed_tokens_;
  std::vector<NumericClaim> out_;
  std::vector<std::size_t> anchor_;  // byte offset of each claimed numeral

  const Token& tok(const Stmt& s, std::size_t i) const { return t_[s.toks[i]]; }

  void mark_brackets() {
    in_brackets_.assign(t_.size(), false);
    int depth = 0;
    for (std::size_t i = 0; i < t_.size(); ++i) {
      if (t_[i].is(Tok::lbracket)) ++depth;
      in_brackets_[i] = depth > 0;
      if (t_[i].is(Tok::rbracket) && depth > 0) --depth;
      if (t_[i].is(Tok::newline) && i + 1 < t_.size() && t_[i + 1].is(Tok::newline)) depth = 0;
    }
  }

  static bool continues_line(const Token& t) {
    return t.is(Tok::comma) || t.is(Tok::eq) || t.is(Tok::op);
  }
  static bool continues_from_next(const Token& t) {
    return t.is(Tok::eq) || t.is_op("mul") || t.is_op("div") || t.is_op("arrow");
  }

  bool line_starts_with_pipe(std::size_t idx) const {
    std::size_t b = t_[idx].begin;
    while (b > 0 && text_[b - 1] != '\n') --b;
    while (b < text_.size() && (text_[b] == ' ' || text_[b] == '\t')) ++b;
    return b < text_.size() && text_[b] == '|';
  }

  void split_statements() {
    Stmt cur;
    auto flush = [&] {
      if (!cur.toks.empty()) stmts_.push_back(std::move(cur));
      cur = Stmt{};
    };
    for (std::size_t i = 0; i < t_.size(); ++i) {
      const Token& t = t_[i];
      if (t.is(Tok::period)) {
        flush();
        continue;
      }
      if (t.is(Tok::newline)) {
        const bool blank = i + 1 < t_.size() && t_[i + 1].is(Tok::newline);
        if (blank || cur.toks.empty()) {
          flush();
          continue;
        }
        const Token& last = t_[cur.toks.back()];
        const bool next_continues = i + 1 < t_.size() && continues_from_next(t_[i + 1]);
        if (!continues_line(last) && !next_continues) flush();
        continue;
      }
      if (line_starts_with_pipe(i)) continue;  // tables are read separately
      cur.toks.push_back(i);
    }
    flush();
  }

  std::vector<Range> clauses(const Stmt& s) const {
    std::vector<Range> out;
    int depth = 0;
    std::size_t b = 0;
    for (std::size_t i = 0; i < s.toks.size(); ++i) {
      const Token& t = tok(s, i);
      if (t.is(Tok::lparen)) ++depth;
      if (t.is(Tok::rparen) && depth > 0) --depth;
      if (depth == 0 && (t.is(Tok::comma) || t.is(Tok::semicolon) || t.is(Tok::colon))) {
        if (i > b) out.push_back({b, i});
        b = i + 1;
      }
    }
    if (s.toks.size() > b) out.push_back({b, s.toks.size()});
    return out;
  }

  std::vector<Range> segments(const Stmt& s, Range r) const {
    std::vector<Range> out;
    std::size_t b = r.begin;
    for (std::size_t i = r.begin; i < r.end; ++i) {
      if (tok(s, i).is(Tok::eq)) {
        out.push_back({b, i});
        b = i + 1;
      }
    }
    out.push_back({b, r.end});
    return out;
  }

  bool free_number(const Stmt& s, std::size_t i) const {
    const std::size_t g = s.toks[i];
    return t_[g].is(Tok::number) && !used_.count(g) && !in_brackets_[g];
  }

  bool arith_op(const Token& t) const {
    return t.is_op("mul") || t.is_op("div") || t.is_op("+") || t.is_op("-");
  }

  bool terminal(const Stmt& s, std::size_t i) const {
    if (i + 1 < s.toks.size() && arith_op(tok(s, i + 1))) return false;
    if (i > 0 && (tok(s, i - 1).is_op("mul") || tok(s, i - 1).is_op("div"))) return false;
    return true;
  }

  bool clause_has_word_prefix(const Stmt& s, Range r, std::initializer_list<std::string_view> prefixes) const {
    for (std::size_t i = r.begin; i < r.end; ++i) {
      const Token& t = tok(s, i);
      if (!t.is(Tok::word)) continue;
      for (auto p : prefixes) {
        if (t.text.rfind(p, 0) == 0) return true;
      }
    }
    return false;
  }

  bool assumed_in(const Stmt& s, Range r) const { return clause_has_word_prefix(s, r, {"assum", "suppos"}); }

  std::optional<std::size_t> first_seconds(const Stmt& s) const {
    for (std::size_t i = 0; i < s.toks.size(); ++i) {
      const Token& t = tok(s, i);
      if (t.is(Tok::number) && t.unit == Unit::s && t.value > 0.0) return i;
    }
    return std::nullopt;
  }

  void emit(NumericClaim c, std::size_t global_tok, std::size_t span_begin) {
    const Token& t = t_[global_tok];
    c.claimed = Quantity::make(t.value, t.unit.value_or(Unit::dimensionless));
    c.claimed_text = std::string(text_.substr(t.begin, t.end - t.begin));
    c.source_span = Span{std::min(span_begin, t.begin), t.full_end()};
    used_.insert(global_tok);
    if (t.unit) claimed_tokens_.insert(global_tok);
    anchor_.push_back(t.begin);
    out_.push_back(std::move(c));
  }

  void scan_statement(const Stmt& s) {
    if (s.toks.empty()) return;
    rule_indexed_speed(s);
    rule_time_speed(s);
    for (Range c : clauses(s)) rule_products(s, c);
    rule_direct_conversion(s);
    for (Range c : clauses(s)) rule_deceleration(s, c);
    for (Range c : clauses(s)) rule_brake(s, c);
    for (Range c : clauses(s)) rule_duration(s, c);
    for (Range c : clauses(s)) rule_distance(s, c);
  }

  // v_1 = ... = 44.9388 km/h
  static std::optional<int> subscript_index(const std::string& w) {
    if (w.size() < 2 || w[0] != 'v') return std::nullopt;
    std::size_t i = 1;
    if (w[i] == '_') ++i;
    if (i >= w.size() || w.size() - i > 4) return std::nullopt;
    int k = 0;
    for (; i < w.size(); ++i) {
      if (!std::isdigit(static_cast<unsigned char>(w[i]))) return std::nullopt;
      k = k * 10 + (w[i] - '0');
    }
    return k;
  }

  void rule_indexed_speed(const Stmt& s) {
    std::size_t i = 0;
    while (i < s.toks.size() && (tok(s, i).is_op("-") || tok(s, i).is_op("+"))) ++i;
    if (i >= s.toks.size() || !tok(s, i).is(Tok::word)) return;
    std::optional<int> k;
    std::size_t after = i + 1;
    if (tok(s, i).text == "v" && i + 3 < s.toks.size() && tok(s, i + 1).is(Tok::lparen) &&
        tok(s, i + 2).is(Tok::number) && tok(s, i + 3).is(Tok::rparen)) {
      const double v = tok(s, i + 2).value;
      if (v >= 0 && v <= 9999 && v == std::floor(v)) k = static_cast<int>(v);
      after = i + 4;
    } else {
      k = subscript_index(tok(s, i).text);
    }
    if (!k || after >= s.toks.size() || !tok(s, after).is(Tok::eq)) return;

    const auto segs = segments(s, {after, s.toks.size()});
    const Range last = segs.back();
    std::optional<std::size_t> claim;
    for (std::size_t j = last.begin; j < last.end; ++j) {
      const Token& t = tok(s, j);
      if (free_number(s, j) && t.unit && is_speed(*t.unit)) claim = j;
    }
    if (!claim) return;
    bool mixes = false;
    for (Range g : segs) {
      bool kmh = false, ms2 = false;
      for (std::size_t j = g.begin; j < g.end; ++j) {
        const Token& t = tok(s, j);
        if (t.is(Tok::number) && t.unit == Unit::kmh) kmh = true;
        if (t.is(Tok::number) && t.unit == Unit::ms2) ms2 = true;
      }
      mixes = mixes || (kmh && ms2);
    }
    NumericClaim c;
    c.kind = ClaimKind::speed_at_time;
    c.inputs.push_back(Quantity::make(*k, Unit::s));
    c.mixes_units = mixes;
    emit(std::move(c), s.toks[*claim], tok(s, i).begin);
  }

  // t = 2 s: 10.57 m/s   |   t = 2 -> v = 10.57 m/s
  void rule_time_speed(const Stmt& s) {
    for (std::size_t i = 0; i + 3 < s.toks.size(); ++i) {
      if (!tok(s, i).is_word("t") || !tok(s, i + 1).is(Tok::eq)) continue;
      const Token& kt = tok(s, i + 2);
      if (!kt.is(Tok::number) || (kt.unit && kt.unit != Unit::s) || kt.value < 0) continue;
      std::size_t j = i + 3;
      if (j < s.toks.size() && (tok(s, j).is(Tok::colon) || tok(s, j).is(Tok::comma) || tok(s, j).is_op("arrow"))) ++j;
      if (j + 1 < s.toks.size() && (tok(s, j).is_word("v") || tok(s, j).is_word("speed")) && tok(s, j + 1).is(Tok::eq)) j += 2;
      if (j >= s.toks.size() || !free_number(s, j)) continue;
      const Token& y = tok(s, j);
      if (!y.unit || !is_speed(*y.unit)) continue;
      NumericClaim c;
      c.kind = ClaimKind::speed_at_time;
      c.inputs.push_back(Quantity::make(kt.value, Unit::s));
      emit(std::move(c), s.toks[j], tok(s, i).begin);
      i = j;
    }
  }

  static bool is_kmh_factor(double f) { return f >= 0.2777 && f <= 0.2778; }

  struct Product {
    std::size_t first;  // statement index where the expression starts
    double input;
    Unit input_unit;
    Unit target;
  };

  // "40 × 0.277778 = 11.1111 m/s", "45 / 3.6 = 12.5 m/s", "12.5 × 3.6 = 45 km/h"
  void rule_products(const Stmt& s, Range clause) {
    const auto segs = segments(s, clause);
    for (std::size_t g = 0; g + 1 < segs.size(); ++g) {
      std::vector<Product> products;
      for (std::size_t i = segs[g].begin; i + 2 < segs[g].end; ++i) {
        const Token& a = tok(s, i);
        const Token& op = tok(s, i + 1);
        const Token& b = tok(s, i + 2);
        if (!a.is(Tok::number) || !b.is(Tok::number)) continue;
        if (op.is_op("mul") && is_kmh_factor(b.value) && (!a.unit || a.unit == Unit::kmh)) {
          products.push_back({i, a.value, Unit::kmh, Unit::ms});
        } else if (op.is_op("mul") && is_kmh_factor(a.value) && (!b.unit || b.unit == Unit::kmh)) {
          products.push_back({i, b.value, Unit::kmh, Unit::ms});
        } else if (op.is_op("div") && b.value == 3.6 && (!a.unit || a.unit == Unit::kmh)) {
          products.push_back({i, a.value, Unit::kmh, Unit::ms});
        } else if (op.is_op("mul") && b.value == 3.6 && (!a.unit || a.unit == Unit::ms)) {
          products.push_back({i, a.value, Unit::ms, Unit::kmh});
        } else {
          continue;
        }
        i += 2;
      }
      if (products.empty()) continue;
      std::vector<std::size_t> results;
      for (std::size_t j = segs[g + 1].begin; j < segs[g + 1].end; ++j) {
        if (free_number(s, j) && tok(s, j).unit && is_speed(*tok(s, j).unit)) results.push_back(j);
      }
      if (results.size() != products.size()) continue;
      bool units_ok = true;
      for (std::size_t k = 0; k < products.size(); ++k) {
        units_ok = units_ok && tok(s, results[k]).unit == products[k].target;
      }
      if (!units_ok) continue;
      for (std::size_t k = 0; k < products.size(); ++k) {
        NumericClaim c;
        c.kind = ClaimKind::conversion;
        c.inputs.push_back(Quantity::make(products[k].input, products[k].input_unit));
        emit(std::move(c), s.toks[results[k]], tok(s, products[k].first).begin);
      }
    }
  }

  static bool connector(const Token& t) {
    if (t.is(Tok::eq) || t.is(Tok::lparen) || t.is(Tok::comma) || t.is_op("arrow")) return true;
    static const std::set<std::string, std::less<>> words = {
        "is", "which", "approximately", "about", "roughly", "around", "equal", "to",
        "equivalent", "or", "equals", "approx", "exactly"};
    return t.is(Tok::word) && words.count(t.text);
  }

  // "1 km/h = 0.277778 m/s", "45 km/h (12.5 m/s)"
  void rule_direct_conversion(const Stmt& s) {
    for (std::size_t i = 0; i < s.toks.size(); ++i) {
      const Token& a = tok(s, i);
      if (!a.is(Tok::number) || !a.unit || !is_speed(*a.unit) || in_brackets_[s.toks[i]]) continue;
      if (i > 0 && (tok(s, i - 1).is_op("mul") || tok(s, i - 1).is_op("div"))) continue;
      std::size_t j = i + 1;
      std::size_t hops = 0;
      while (j < s.toks.size() && hops < 4 && connector(tok(s, j))) {
        ++j;
        ++hops;
      }
      if (hops == 0 || j >= s.toks.size() || !free_number(s, j)) continue;
      const Token& b = tok(s, j);
      if (!b.unit || !is_speed(*b.unit) || *b.unit == *a.unit) continue;
      if (j + 1 < s.toks.size() && arith_op(tok(s, j + 1))) continue;
      NumericClaim c;
      c.kind = ClaimKind::conversion;
      c.inputs.push_back(Quantity::make(a.value, *a.unit));
      emit(std::move(c), s.toks[j], a.begin);
      i = j;
    }
  }

  void rule_deceleration(const Stmt& s, Range clause) {
    const auto segs = segments(s, clause);
    for (std::size_t g = 0; g < segs.size(); ++g) {
      for (std::size_t i = segs[g].begin; i < segs[g].end; ++i) {
        if (!free_number(s, i) || tok(s, i).unit != Unit::ms2 || !terminal(s, i)) continue;
        bool computed = false;
        for (std::size_t h = 0; h < g && !computed; ++h) {
          bool num = false, op = false;
          for (std::size_t j = segs[h].begin; j < segs[h].end; ++j) {
            num = num || tok(s, j).is(Tok::number);
            op = op || arith_op(tok(s, j));
          }
          computed = num && op;
        }
        NumericClaim c;
        c.kind = ClaimKind::deceleration;
        c.assumed = !computed && assumed_in(s, clause);
        if (auto d = first_seconds(s)) c.inputs.push_back(Quantity::make(tok(s, *d).value, Unit::s));
        emit(std::move(c), s.toks[i], tok(s, clause.begin).begin);
      }
    }
  }

  // "apply a brake value of 0.2889 for each of the 5 seconds"
  void rule_brake(const Stmt& s, Range clause) {
    bool timed = first_seconds(s).has_value();
    for (std::size_t i = 0; i < s.toks.size() && !timed; ++i) {
      const Token& t = tok(s, i);
      timed = t.is_word("second") || t.is_word("seconds") || t.is_word("step") || t.is_word("steps");
    }
    if (!timed) return;
    for (std::size_t i = clause.begin; i < clause.end; ++i) {
      const Token& w = tok(s, i);
      if (!(w.is_word("brake") || w.is_word("braking"))) continue;
      std::size_t j = i + 1;
      std::size_t filler = 0;
      while (j < clause.end && filler < 4 && (tok(s, j).is(Tok::word) || tok(s, j).is(Tok::eq))) {
        ++j;
        ++filler;
      }
      if (j >= clause.end || !free_number(s, j) || tok(s, j).unit) continue;
      if (j + 1 < s.toks.size() && arith_op(tok(s, j + 1))) continue;
      NumericClaim c;
      c.kind = ClaimKind::brake_value;
      c.assumed = assumed_in(s, clause);
      if (auto d = first_seconds(s)) c.inputs.push_back(Quantity::make(tok(s, *d).value, Unit::s));
      emit(std::move(c), s.toks[j], w.begin);
      i = j;
    }
  }

  void rule_duration(const Stmt& s, Range clause) {
    static const std::set<std::string, std::less<>> lead = {"in", "within", "over", "takes", "take", "taking",
                                                            "requires", "require", "need", "needs", "after"};
    static const std::set<std::string, std::less<>> hedge = {"approximately", "about", "roughly", "around", "approx"};
    for (std::size_t i = clause.begin; i < clause.end; ++i) {
      if (!free_number(s, i) || tok(s, i).unit != Unit::s || !terminal(s, i)) continue;
      if (i == clause.begin) continue;
      std::size_t p = i - 1;
      if (tok(s, p).is(Tok::word) && hedge.count(tok(s, p).text) && p > clause.begin) --p;
      if (!tok(s, p).is(Tok::word) || !lead.count(tok(s, p).text)) continue;
      NumericClaim c;
      c.kind = ClaimKind::duration;
      c.assumed = assumed_in(s, clause);
      emit(std::move(c), s.toks[i], tok(s, p).begin);
    }
  }

  void rule_distance(const Stmt& s, Range clause) {
    for (std::size_t i = clause.begin; i < clause.end; ++i) {
      if (!free_number(s, i) || tok(s, i).unit != Unit::m || !terminal(s, i)) continue;
      if (tok(s, i).value < 0) continue;
      NumericClaim c;
      c.kind = ClaimKind::distance;
      if (clause_has_word_prefix(s, clause, {"stopping", "braking"})) {
        c.distance_role = DistanceRole::stopping;
      } else if (clause_has_word_prefix(s, clause, {"following", "headway"}) || safe_distance(s, clause)) {
        c.distance_role = DistanceRole::following;
      }
      c.assumed = assumed_in(s, clause);
      emit(std::move(c), s.toks[i], tok(s, i).begin);
    }
  }

  bool safe_distance(const Stmt& s, Range clause) const {
    for (std::size_t i = clause.begin; i + 1 < clause.end; ++i) {
      if (tok(s, i).is_word("safe") && tok(s, i + 1).is_word("distance")) return true;
    }
    return false;
  }

  // Markdown tables with "time" and "speed" columns.
  void scan_tables() {
    std::size_t pos = 0;
    int time_col = -1, speed_col = -1;
    Unit speed_unit = Unit::dimensionless;
    while (pos < text_.size()) {
      std::size_t eol = text_.find('\n', pos);
      if (eol == std::string_view::npos) eol = text_.size();
      const std::string_view line = text_.substr(pos, eol - pos);
      const std::size_t first = line.find_first_not_of(" \t");
      if (first == std::string_view::npos || line[first] != '|') {
        time_col = speed_col = -1;
        pos = eol + 1;
        continue;
      }
      // Split cells, remembering byte offsets.
      std::vector<std::pair<std::size_t, std::string_view>> cells;
      std::size_t c = first + 1;
      while (c <= line.size()) {
        std::size_t bar = line.find('|', c);
        if (bar == std::string_view::npos) bar = line.size();
        cells.emplace_back(pos + c, line.substr(c, bar - c));
        c = bar + 1;
      }
      auto lower = [](std::string_view v) {
        std::string r(v);
        for (auto& ch : r) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        return r;
      };
      if (time_col < 0) {
        for (std::size_t k = 0; k < cells.size(); ++k) {
          const std::string h = lower(cells[k].second);
          if (h.find("time") != std::string::npos) time_col = static_cast<int>(k);
          if (h.find("speed") != std::string::npos || h.find("velocity") != std::string::npos) {
            speed_col = static_cast<int>(k);
            speed_unit = Unit::dimensionless;
            const std::size_t lp = cells[k].second.find('(');
            if (lp != std::string_view::npos) {
              std::size_t q = lp + 1;
              while (q < cells[k].second.size() && cells[k].second[q] == ' ') ++q;
              if (auto u = detail::match_unit(cells[k].second, q); u && is_speed(u->first)) speed_unit = u->first;
            }
          }
        }
        if (time_col < 0 || speed_col < 0 || !is_speed(speed_unit)) time_col = speed_col = -1;
      } else if (static_cast<std::size_t>(std::max(time_col, speed_col)) < cells.size()) {
        double tv = 0.0, sv = 0.0;
        const auto& tc = cells[static_cast<std::size_t>(time_col)];
        const auto& sc = cells[static_cast<std::size_t>(speed_col)];
        const std::string tstr = trim(strip_emphasis(tc.second));
        const std::string sstr = trim(strip_emphasis(sc.second));
        if (parse_decimal(tstr, &tv) && parse_decimal(sstr, &sv) && tv >= 0) {
          const std::size_t soff = sc.first + sc.second.find_first_not_of(" \t*");
          std::size_t send = soff;
          while (send < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[send])) ||
                                         text_[send] == '.' || text_[send] == '-')) {
            ++send;
          }
          const std::size_t toff = tc.first + tc.second.find_first_not_of(" \t*");
          NumericClaim cl;
          cl.kind = ClaimKind::speed_at_time;
          cl.inputs.push_back(Quantity::make(tv, Unit::s));
          cl.claimed = Quantity::make(sv, speed_unit);
          cl.claimed_text = std::string(text_.substr(soff, send - soff));
          cl.source_span = Span{std::min(toff, soff), send};
          anchor_.push_back(soff);
          out_.push_back(std::move(cl));
        }
      }
      pos = eol + 1;
    }
  }
};

// ---------------------------------------------------------------------------
// Advisories

struct Line {
  std::size_t begin;
  std::size_t end;  // excluding '\n'
};

std::vector<Line> split_lines(std::string_view text) {
  std::vector<Line> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    lines.push_back({pos, eol});
    if (eol == text.size()) break;
    pos = eol + 1;
  }
  return lines;
}

// "N." at line start (after optional emphasis); returns the number and where
// the item text starts.
std::optional<std::pair<int, std::size_t>> item_marker(std::string_view text, Line l) {
  std::size_t i = l.begin;
  while (i < l.end && (text[i] == ' ' || text[i] == '\t')) ++i;
  while (i < l.end && (text[i] == '*' || text[i] == '_')) ++i;
  const std::size_t d0 = i;
  while (i < l.end && i - d0 < 4 && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
  if (i == d0 || i >= l.end || text[i] != '.') return std::nullopt;
  if (i + 1 < l.end && std::isdigit(static_cast<unsigned char>(text[i + 1]))) return std::nullopt;
  int n = 0;
  std::from_chars(text.data() + d0, text.data() + i, n);
  return std::pair{n, i + 1};
}

bool blank(std::string_view text, Line l) {
  for (std::size_t i = l.begin; i < l.end; ++i) {
    if (!is_space(text[i])) return false;
  }
  return true;
}

std::string collapse_spaces(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (is_space(c)) {
      space = !out.empty();
      continue;
    }
    if (space) out.push_back(' ');
    space = false;
    out.push_back(c);
  }
  return out;
}

}  // namespace

ClaimExtraction extract_claims(std::string_view text) { return ClaimScanner(text).run(); }

std::vector<Advisory> extract_advisories(std::string_view text) {
  std::vector<Advisory> out;
  const auto lines = split_lines(text);
  int last_index = 0;
  std::size_t k = 0;
  while (k < lines.size()) {
    auto marker = item_marker(text, lines[k]);
    if (!marker || marker->first <= last_index) {
      ++k;
      continue;
    }
    Advisory a;
    a.index = marker->first;
    last_index = a.index;
    const std::size_t start = lines[k].begin;
    std::size_t end = lines[k].end;
    std::string first = strip_emphasis(text.substr(marker->second, lines[k].end - marker->second));
    std::string rest;
    const std::size_t colon = first.find(':');
    if (colon != std::string::npos) {
      a.title = trim(first.substr(0, colon));
      rest = first.substr(colon + 1);
    } else {
      a.title = trim(first);
    }
    ++k;
    while (k < lines.size() && !blank(text, lines[k])) {
      auto next = item_marker(text, lines[k]);
      if (next && next->first > last_index) break;
      rest += "\n";
      rest += strip_emphasis(text.substr(lines[k].begin, lines[k].end - lines[k].begin));
      end = lines[k].end;
      ++k;
    }
    a.body = collapse_spaces(rest);
    a.span = Span{start, end};
    out.push_back(std::move(a));
  }
  return out;
}

Extraction extract_all(std::string_view text) {
  Extraction e;
  try {
    e.schedule = extract_control_lists(text);
  } catch (const ParseError& err) {
    e.schedule_error = std::string(err.what()) + " at offset " + std::to_string(err.offset());
  }
  e.claims = extract_claims(text);
  e.advisories = extract_advisories(text);
  return e;
}

namespace {
nlohmann::json quantity_json(const Quantity& q) { return {{"value", q.value}, {"unit", unit_name(q.unit)}}; }
nlohmann::json list_json(const ControlList& l) {
  return {{"name", l.name}, {"entries", l.entries}, {"truncated", l.truncated}, {"span", {l.span.begin, l.span.end}}};
}
}  // namespace

nlohmann::json to_json(const NumericClaim& c) {
  nlohmann::json j;
  j["kind"] = to_string(c.kind);
  j["inputs"] = nlohmann::json::array();
  for (const auto& q : c.inputs) j["inputs"].push_back(quantity_json(q));
  j["claimed"] = quantity_json(c.claimed);
  j["claimed_text"] = c.claimed_text;
  j["span"] = {c.source_span.begin, c.source_span.end};
  j["assumed"] = c.assumed;
  j["mixes_units"] = c.mixes_units;
  if (c.kind == ClaimKind::distance) j["distance_role"] = role_name(c.distance_role);
  return j;
}

nlohmann::json to_json(const ControlSchedule& s) {
  nlohmann::json j;
  j["speed"] = s.speed ? list_json(*s.speed) : nlohmann::json(nullptr);
  j["brake"] = s.brake ? list_json(*s.brake) : nlohmann::json(nullptr);
  j["interpretation"] = s.interpretation ? nlohmann::json(to_string(*s.interpretation)) : nlohmann::json(nullptr);
  j["truncated"] = s.truncated();
  j["range_violations"] = s.range_violations;
  return j;
}

nlohmann::json to_json(const Advisory& a) {
  return {{"index", a.index}, {"title", a.title}, {"body", a.body}, {"span", {a.span.begin, a.span.end}}};
}

nlohmann::json to_json(const Extraction& e) {
  nlohmann::json j;
  j["schedule"] = e.schedule ? to_json(*e.schedule) : nlohmann::json(nullptr);
  j["schedule_error"] = e.schedule_error ? nlohmann::json(*e.schedule_error) : nlohmann::json(nullptr);
  j["claims"] = nlohmann::json::array();
  for (const auto& c : e.claims.claims) j["claims"].push_back(to_json(c));
  j["coverage"] = e.claims.coverage();
  j["tagged_numerals"] = e.claims.tagged_numerals;
  j["claimed_numerals"] = e.claims.claimed_numerals;
  j["advisories"] = nlohmann::json::array();
  for (const auto& a : e.advisories) j["advisories"].push_back(to_json(a));
  return j;
}

}  // namespace llmdrive::parse
