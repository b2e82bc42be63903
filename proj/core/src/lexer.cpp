#include "lexer.hpp"

#include <cctype>
#include <charconv>
#include <cmath>

#include "cbi/names.hpp"

namespace cbi::detail {

std::string describe(const Token& t) {
  switch (t.kind) {
    case Tok::End:
      return "end of input";
    case Tok::Ident:
      return "'" + t.text + "'";
    default:
      return "'" + t.text + "'";
  }
}

namespace {

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space_and_comments();
      Token t;
      t.span.line = line_;
      t.span.column = col_;
      if (pos_ >= src_.size()) {
        t.kind = Tok::End;
        t.span.end_line = line_;
        t.span.end_column = col_;
        out.push_back(std::move(t));
        return out;
      }
      std::size_t start = pos_;
      lex_one(t);
      t.text = std::string(src_.substr(start, pos_ - start));
      t.span.end_line = line_;
      t.span.end_column = col_;
      out.push_back(std::move(t));
    }
  }

 private:
  char peek(std::size_t ahead = 0) const { return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0'; }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  SourceSpan here() const { return {line_, col_, line_, col_ + 1}; }

  void skip_space_and_comments() {
    for (;;) {
      while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(peek()))) advance();
      if (peek() == '(' && peek(1) == '*') {
        SourceSpan open = here();
        int depth = 0;
        do {
          if (pos_ >= src_.size()) throw SyntaxError(open, "end of input", {"'*)'"});
          if (peek() == '(' && peek(1) == '*') {
            ++depth;
            advance();
            advance();
          } else if (peek() == '*' && peek(1) == ')') {
            --depth;
            advance();
            advance();
          } else {
            advance();
          }
        } while (depth > 0);
        continue;
      }
      if (peek() == '/' && peek(1) == '/') {
        while (pos_ < src_.size() && peek() != '\n') advance();
        continue;
      }
      return;
    }
  }

  std::string take_digits(bool allow_hex) {
    std::string digits;
    while (pos_ < src_.size()) {
      char c = peek();
      if (c == '_') {
        advance();
        continue;
      }
      if (is_digit(c) || (allow_hex && std::isxdigit(static_cast<unsigned char>(c)))) {
        digits.push_back(c);
        advance();
        continue;
      }
      break;
    }
    return digits;
  }

  void lex_number(Token& t) {
    SourceSpan at = here();
    std::string digits = take_digits(false);
    if (peek() == '#') {
      int base = 0;
      std::from_chars(digits.data(), digits.data() + digits.size(), base);
      if (base != 2 && base != 8 && base != 16) throw SyntaxError(at, digits + "#", {"base 2, 8 or 16"});
      advance();
      std::string body = take_digits(true);
      std::int64_t v = 0;
      auto r = std::from_chars(body.data(), body.data() + body.size(), v, base);
      if (body.empty() || r.ec != std::errc() || r.ptr != body.data() + body.size())
        throw SyntaxError(at, body, {"digits of base " + std::to_string(base)});
      t.kind = Tok::Int;
      t.int_value = v;
      return;
    }
    bool real = false;
    std::string text = digits;
    if (peek() == '.' && is_digit(peek(1))) {
      real = true;
      advance();
      text += '.' + take_digits(false);
    }
    if ((peek() == 'e' || peek() == 'E') &&
        (is_digit(peek(1)) || ((peek(1) == '+' || peek(1) == '-') && is_digit(peek(2))))) {
      real = true;
      text.push_back('e');
      advance();
      if (peek() == '+' || peek() == '-') {
        text.push_back(peek());
        advance();
      }
      text += take_digits(false);
    }
    if (real) {
      t.kind = Tok::Real;
      auto r = std::from_chars(text.data(), text.data() + text.size(), t.real_value);
      if (r.ec != std::errc()) throw SyntaxError(at, text, {"a REAL literal"});
    } else {
      t.kind = Tok::Int;
      auto r = std::from_chars(text.data(), text.data() + text.size(), t.int_value);
      if (r.ec != std::errc()) throw SyntaxError(at, text, {"an INT literal in range"});
    }
  }

  // After "T#" / "TIME#": components such as 1h, 2m, 3s, 4ms, 1.5s.
  void lex_duration(Token& t) {
    SourceSpan at = here();
    double total = 0.0;
    bool any = false;
    for (;;) {
      if (!is_digit(peek())) break;
      std::string num = take_digits(false);
      if (peek() == '.' && is_digit(peek(1))) {
        advance();
        num += '.' + take_digits(false);
      }
      double v = 0.0;
      std::from_chars(num.data(), num.data() + num.size(), v);
      std::string unit;
      while (std::isalpha(static_cast<unsigned char>(peek()))) {
        // "ms" must not swallow a following component like "1m5s".
        unit.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(peek()))));
        advance();
        if (unit == "m" && peek() != 's' && peek() != 'S') break;
        if (unit == "ms" || unit == "s" || unit == "h" || unit == "d") break;
      }
      double scale = 0.0;
      if (unit == "d")
        scale = 86'400'000.0;
      else if (unit == "h")
        scale = 3'600'000.0;
      else if (unit == "m")
        scale = 60'000.0;
      else if (unit == "s")
        scale = 1000.0;
      else if (unit == "ms")
        scale = 1.0;
      else
        throw SyntaxError(at, unit.empty() ? "end of duration" : unit, {"d", "h", "m", "s", "ms"});
      total += v * scale;
      any = true;
      if (peek() == '_') advance();
    }
    if (!any) throw SyntaxError(at, std::string(1, peek()), {"a duration such as 1s or 250ms"});
    t.kind = Tok::Time;
    t.real_value = total;
  }

  void lex_one(Token& t) {
    char c = peek();
    if (is_ident_start(c)) {
      std::size_t start = pos_;
      while (pos_ < src_.size() && is_ident_char(peek())) advance();
      t.upper = to_key(src_.substr(start, pos_ - start));
      if ((t.upper == "T" || t.upper == "TIME") && peek() == '#') {
        advance();
        lex_duration(t);
        return;
      }
      t.kind = Tok::Ident;
      return;
    }
    if (is_digit(c)) {
      lex_number(t);
      return;
    }
    SourceSpan at = here();
    advance();
    switch (c) {
      case ':':
        if (peek() == '=') {
          advance();
          t.kind = Tok::Assign;
        } else {
          t.kind = Tok::Colon;
        }
        return;
      case '=':
        if (peek() == '>') {
          advance();
          t.kind = Tok::Arrow;
        } else {
          t.kind = Tok::Eq;
        }
        return;
      case ';':
        t.kind = Tok::Semi;
        return;
      case ',':
        t.kind = Tok::Comma;
        return;
      case '.':
        if (peek() == '.') {
          advance();
          t.kind = Tok::DotDot;
        } else {
          t.kind = Tok::Dot;
        }
        return;
      case '(':
        t.kind = Tok::LParen;
        return;
      case ')':
        t.kind = Tok::RParen;
        return;
      case '+':
        t.kind = Tok::Plus;
        return;
      case '-':
        t.kind = Tok::Minus;
        return;
      case '*':
        t.kind = Tok::Star;
        return;
      case '/':
        t.kind = Tok::Slash;
        return;
      case '&':
        t.kind = Tok::Amp;
        return;
      case '<':
        if (peek() == '=') {
          advance();
          t.kind = Tok::Le;
        } else if (peek() == '>') {
          advance();
          t.kind = Tok::Ne;
        } else {
          t.kind = Tok::Lt;
        }
        return;
      case '>':
        if (peek() == '=') {
          advance();
          t.kind = Tok::Ge;
        } else {
          t.kind = Tok::Gt;
        }
        return;
      default:
        throw SyntaxError(at, std::string("'") + c + "'", {"a token"});
    }
  }

  std::string_view src_;
  std::size_t pos_{0};
  std::uint32_t line_{1};
  std::uint32_t col_{1};
};

}  // namespace

std::vector<Token> tokenize(std::string_view source) { return Lexer(source).run(); }

}  // namespace cbi::detail
