#include <cctype>
#include <charconv>
#include <string>

#include "anbranch/errors.hpp"
#include "anbranch/mir.hpp"

namespace anb::mir {

namespace {

enum class Tok { Ident, Global, Local, Number, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  std::uint32_t value = 0;
  int line = 1;
  int column = 1;
};

bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-';
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    skip_blank();
    Token t;
    t.line = line_;
    t.column = col_;
    if (pos_ >= src_.size()) return t;

    const char c = src_[pos_];
    if (c == '@' || c == '%') {
      advance();
      t.kind = c == '@' ? Tok::Global : Tok::Local;
      t.text = take_while(is_name_char);
      if (t.text.empty()) fail("expected a name after '" + std::string(1, c) + "'", t);
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      t.kind = Tok::Number;
      t.text = take_while(is_name_char);
      t.value = parse_number(t);
      return t;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      t.kind = Tok::Ident;
      t.text = take_while([](char ch) {
        return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_';
      });
      return t;
    }
    if (std::string_view("{}=,:[]+").find(c) != std::string_view::npos) {
      advance();
      t.kind = Tok::Punct;
      t.text = std::string(1, c);
      return t;
    }
    fail(std::string("unexpected character '") + c + "'", t);
  }

  [[noreturn]] static void fail(const std::string& msg, const Token& at) {
    throw ParseError(msg, at.line, at.column);
  }

 private:
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_blank() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  template <typename Pred>
  std::string take_while(Pred pred) {
    std::string out;
    while (pos_ < src_.size() && pred(src_[pos_])) {
      out.push_back(src_[pos_]);
      advance();
    }
    return out;
  }

  static std::uint32_t parse_number(const Token& t) {
    std::string_view s = t.text;
    int base = 10;
    if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
      s.remove_prefix(2);
      base = 16;
    }
    std::uint32_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
    if (ec == std::errc::result_out_of_range) fail("integer does not fit in 32 bits", t);
    if (ec != std::errc() || ptr != s.data() + s.size()) fail("malformed integer '" + t.text + "'", t);
    return v;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
 public:
  explicit Parser(std::string_view src) : lex_(src) { shift(); }

  Program program() {
    Program p;
    while (cur_.kind != Tok::End) p.functions.push_back(function());
    return p;
  }

 private:
  void shift() { cur_ = lex_.next(); }

  [[noreturn]] void fail(const std::string& msg) const { Lexer::fail(msg, cur_); }

  bool at_punct(char c) const { return cur_.kind == Tok::Punct && cur_.text[0] == c; }
  bool at_ident(std::string_view s) const { return cur_.kind == Tok::Ident && cur_.text == s; }

  void expect_punct(char c) {
    if (!at_punct(c)) fail(std::string("expected '") + c + "'");
    shift();
  }

  void expect_ident(std::string_view s) {
    if (!at_ident(s)) fail("expected '" + std::string(s) + "'");
    shift();
  }

  std::string name(Tok kind, const char* what) {
    if (cur_.kind != kind) fail(std::string("expected ") + what);
    std::string s = cur_.text;
    shift();
    return s;
  }

  std::uint32_t number() {
    if (cur_.kind != Tok::Number) fail("expected an integer");
    std::uint32_t v = cur_.value;
    shift();
    return v;
  }

  static bool looks_like_reg(const Token& t) {
    if (t.kind != Tok::Ident || t.text.size() < 2 || t.text[0] != 'r') return false;
    for (std::size_t i = 1; i < t.text.size(); ++i) {
      if (!std::isdigit(static_cast<unsigned char>(t.text[i]))) return false;
    }
    return true;
  }

  Reg reg() {
    if (!looks_like_reg(cur_)) fail("expected a register");
    std::uint32_t id = 0;
    auto [ptr, ec] = std::from_chars(cur_.text.data() + 1, cur_.text.data() + cur_.text.size(), id);
    if (ec != std::errc()) fail("register number out of range");
    shift();
    return Reg{id};
  }

  Predicate pred() {
    if (cur_.kind != Tok::Ident) fail("expected a predicate");
    auto p = parse_predicate(cur_.text);
    if (!p) fail("unknown predicate '" + cur_.text + "'");
    shift();
    return *p;
  }

  std::string label() { return name(Tok::Local, "a block label"); }

  Function function() {
    expect_ident("func");
    Function f;
    f.name = name(Tok::Global, "a function name");
    while (cur_.kind == Tok::Ident) {
      f.attrs.insert(cur_.text);
      shift();
    }
    expect_punct('{');
    while (!at_punct('}')) {
      if (cur_.kind == Tok::End) fail("unterminated function body");
      f.blocks.push_back(block());
    }
    shift();
    return f;
  }

  Block block() {
    expect_ident("block");
    Block b;
    b.label = label();
    expect_punct(':');
    while (!at_ident("block") && !at_punct('}') && cur_.kind != Tok::End) {
      b.instrs.push_back(instr());
    }
    return b;
  }

  struct Address {
    std::optional<Reg> base;
    std::uint32_t offset = 0;
  };

  Address address() {
    expect_punct('[');
    Address a;
    if (cur_.kind == Tok::Number) {
      a.offset = number();
    } else {
      a.base = reg();
      if (at_punct('+')) {
        shift();
        a.offset = number();
      }
    }
    expect_punct(']');
    return a;
  }

  Instr instr() {
    if (looks_like_reg(cur_)) return defining_instr();
    if (cur_.kind != Tok::Ident) fail("expected an instruction");
    const std::string op = cur_.text;
    shift();

    if (op == "store") {
      Address a = address();
      expect_punct(',');
      return Instr::store(a.base, a.offset, reg());
    }
    if (op == "cbr") {
      Predicate p = pred();
      Reg a = reg();
      expect_punct(',');
      Reg b = reg();
      expect_punct(',');
      std::string t = label();
      expect_punct(',');
      return Instr::cbr(p, a, b, std::move(t), label());
    }
    if (op == "switch") {
      Reg v = reg();
      std::vector<std::pair<std::uint32_t, std::string>> cases;
      for (;;) {
        expect_punct(',');
        if (at_ident("default")) {
          shift();
          expect_punct(':');
          return Instr::switch_(v, std::move(cases), label());
        }
        std::uint32_t value = number();
        expect_punct(':');
        cases.emplace_back(value, label());
      }
    }
    if (op == "jmp") return Instr::jmp(label());
    if (op == "ret") return Instr::ret(reg());
    if (op == "trap") return Instr::trap(number());
    if (op == "cfi_update") return Instr::cfi_update(number());
    if (op == "cfi_check") return Instr::cfi_check(number());
    if (op == "cfi_merge") {
      Reg c = reg();
      expect_punct(',');
      return Instr::cfi_merge(c, number());
    }
    Lexer::fail("unknown instruction '" + op + "'", cur_);
  }

  Instr defining_instr() {
    Reg dst = reg();
    expect_punct('=');
    if (cur_.kind != Tok::Ident) fail("expected an opcode");
    const Token op_tok = cur_;
    auto op = parse_opcode(cur_.text);
    shift();
    if (!op) Lexer::fail("unknown opcode '" + op_tok.text + "'", op_tok);

    switch (*op) {
      case Opcode::Const: return Instr::constant(dst, number());
      case Opcode::Mov: return Instr::mov(dst, reg());
      case Opcode::Load: {
        Address a = address();
        return Instr::load(dst, a.base, a.offset);
      }
      case Opcode::Select: {
        Predicate p = pred();
        Reg a = reg();
        expect_punct(',');
        Reg b = reg();
        expect_punct(',');
        Reg v1 = reg();
        expect_punct(',');
        return Instr::select(dst, p, a, b, v1, reg());
      }
      default:
        if (!is_binary(*op)) Lexer::fail("'" + op_tok.text + "' does not produce a value", op_tok);
        Reg a = reg();
        expect_punct(',');
        return Instr::binary(*op, dst, a, reg());
    }
  }

  Lexer lex_;
  Token cur_;
};

}  // namespace

Program parse(std::string_view text) { return Parser(text).program(); }

}  // namespace anb::mir
