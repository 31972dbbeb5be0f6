#pragma once

// Verification and method-body expressions: a small, total language over the
// quantitative properties of a subject, with fuzzy connectives.
//
// Grammar (published in docs/expression-grammar.md):
//
//   expr     = "if" expr "then" expr "else" expr | or ;
//   or       = and { "or" and } ;
//   and      = not { "and" not } ;
//   not      = "not" not | cmp ;
//   cmp      = additive [ cmpop additive ] ;
//   additive = term { ("+" | "-") term } ;
//   term     = unary { ("*" | "/") unary } ;
//   unary    = "-" unary | primary ;
//   primary  = number | string | "true" | "false" | "degree" "(" number ")"
//            | "self" "." ident "." field | ident "(" expr ")" | ident
//            | "(" expr ")" ;

#include <oodn/error.hpp>
#include <oodn/quantity.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <variant>
#include <vector>

namespace oodn {

/// Node variants. The declaration order is the first key of the normal-form
/// ordering, so do not reorder.
enum class ExprKind : std::uint8_t {
    Number,
    Degree,
    Text,
    PropertyRef,
    Parameter,
    Negate,
    Add,
    Subtract,
    Multiply,
    Divide,
    Equal,
    NotEqual,
    Less,
    LessEqual,
    Greater,
    GreaterEqual,
    And,
    Or,
    Not,
    Sum,
    Min,
    Max,
    Count,
    AllEqual,
    If,
};

/// Which facet of a referenced property is read.
enum class RefField : std::uint8_t { Value, Units, Values, Count };

/// Static result sort of an expression.
enum class Sort : std::uint8_t { Number, Degree, Text, NumberList };

/// Thrown when an expression is assembled from operands of the wrong sort.
class SortError : public Error {
public:
    using Error::Error;
};

inline std::string_view to_string(Sort s) {
    switch (s) {
        case Sort::Number: return "number";
        case Sort::Degree: return "degree";
        case Sort::Text: return "text";
        case Sort::NumberList: return "list-of-number";
    }
    return "?";
}

inline std::string_view to_string(RefField f) {
    switch (f) {
        case RefField::Value: return "value";
        case RefField::Units: return "units";
        case RefField::Values: return "values";
        case RefField::Count: return "count";
    }
    return "?";
}

/// [A-Za-z_][A-Za-z0-9_]*
inline bool is_identifier(std::string_view s) {
    if (s.empty() || std::isdigit(static_cast<unsigned char>(s.front()))) return false;
    return std::ranges::all_of(s, [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

/// Words that cannot name a parameter.
inline bool is_reserved_word(std::string_view s) {
    return s == "if" || s == "then" || s == "else" || s == "and" || s == "or" || s == "not" || s == "true"
        || s == "false" || s == "self" || s == "degree";
}

/// Immutable expression tree. Copies share structure.
class Expr {
public:
    static Expr number(double v) {
        if (!std::isfinite(v)) throw SortError("number literal must be finite");
        return Expr(Node{ExprKind::Number, v, {}, RefField::Value, {}});
    }
    static Expr degree(double v) {
        if (!(v >= 0.0 && v <= 1.0)) throw SortError("degree literal must lie in [0,1]");
        return Expr(Node{ExprKind::Degree, v, {}, RefField::Value, {}});
    }
    static Expr text(std::string s) { return Expr(Node{ExprKind::Text, 0.0, std::move(s), RefField::Value, {}}); }
    static Expr property(std::string name, RefField field) {
        if (!is_identifier(name)) throw SortError("property reference needs an identifier, got '" + name + "'");
        return Expr(Node{ExprKind::PropertyRef, 0.0, std::move(name), field, {}});
    }
    static Expr parameter(std::string name) {
        if (!is_identifier(name) || is_reserved_word(name))
            throw SortError("parameter name must be a non-reserved identifier, got '" + name + "'");
        return Expr(Node{ExprKind::Parameter, 0.0, std::move(name), RefField::Value, {}});
    }
    static Expr unary(ExprKind kind, Expr operand);
    static Expr binary(ExprKind kind, Expr lhs, Expr rhs);
    static Expr conditional(Expr cond, Expr then_branch, Expr else_branch);

    ExprKind kind() const noexcept { return node_->kind; }
    double number() const noexcept { return node_->number; }
    /// Text payload: literal text, property name or parameter name.
    const std::string& name() const noexcept { return node_->text; }
    RefField field() const noexcept { return node_->field; }
    std::span<const Expr> children() const noexcept { return node_->children; }
    const Expr& child(std::size_t i) const { return node_->children.at(i); }
    Sort sort() const noexcept { return node_->sort; }

    bool is_literal() const noexcept {
        return kind() == ExprKind::Number || kind() == ExprKind::Degree || kind() == ExprKind::Text;
    }

    friend bool operator==(const Expr& a, const Expr& b);

private:
    struct Node {
        ExprKind kind;
        double number;
        std::string text;
        RefField field;
        std::vector<Expr> children;
        Sort sort = Sort::Number;
    };

    explicit Expr(Node n);

    std::shared_ptr<const Node> node_;
};

namespace detail {

inline bool is_comparison(ExprKind k) {
    return k >= ExprKind::Equal && k <= ExprKind::GreaterEqual;
}
inline bool is_arithmetic(ExprKind k) {
    return k >= ExprKind::Add && k <= ExprKind::Divide;
}
inline bool is_aggregate(ExprKind k) {
    return k >= ExprKind::Sum && k <= ExprKind::AllEqual;
}
inline bool is_commutative(ExprKind k) {
    return k == ExprKind::Add || k == ExprKind::Multiply || k == ExprKind::And || k == ExprKind::Or
        || k == ExprKind::Equal || k == ExprKind::NotEqual;
}

inline Sort infer_sort(ExprKind kind, RefField field, const std::vector<Expr>& children) {
    switch (kind) {
        case ExprKind::Number:
        case ExprKind::Parameter:
            return Sort::Number;
        case ExprKind::Degree:
            return Sort::Degree;
        case ExprKind::Text:
            return Sort::Text;
        case ExprKind::PropertyRef:
            switch (field) {
                case RefField::Value:
                case RefField::Count: return Sort::Number;
                case RefField::Units: return Sort::Text;
                case RefField::Values: return Sort::NumberList;
            }
            return Sort::Number;
        case ExprKind::Negate:
        case ExprKind::Add:
        case ExprKind::Subtract:
        case ExprKind::Multiply:
        case ExprKind::Divide:
            for (const auto& c : children) {
                if (c.sort() != Sort::Number)
                    throw SortError("arithmetic needs number operands, got " + std::string(to_string(c.sort())));
            }
            return Sort::Number;
        case ExprKind::Equal:
        case ExprKind::NotEqual:
        case ExprKind::Less:
        case ExprKind::LessEqual:
        case ExprKind::Greater:
        case ExprKind::GreaterEqual: {
            const Sort l = children[0].sort();
            const Sort r = children[1].sort();
            if (l != r || (l != Sort::Number && l != Sort::Text))
                throw SortError("comparison needs two number or two text operands, got "
                                + std::string(to_string(l)) + " and " + std::string(to_string(r)));
            return Sort::Degree;
        }
        case ExprKind::And:
        case ExprKind::Or:
        case ExprKind::Not:
            for (const auto& c : children) {
                if (c.sort() != Sort::Degree)
                    throw SortError("connective needs degree operands, got " + std::string(to_string(c.sort())));
            }
            return Sort::Degree;
        case ExprKind::Sum:
        case ExprKind::Min:
        case ExprKind::Max:
        case ExprKind::Count:
        case ExprKind::AllEqual:
            if (children[0].sort() != Sort::NumberList)
                throw SortError("aggregate needs a list-of-number argument, got "
                                + std::string(to_string(children[0].sort())));
            return kind == ExprKind::AllEqual ? Sort::Degree : Sort::Number;
        case ExprKind::If:
            if (children[0].sort() != Sort::Degree) throw SortError("if condition must be a degree");
            if (children[1].sort() != children[2].sort()) throw SortError("if branches must have the same sort");
            return children[1].sort();
    }
    return Sort::Number;
}

} // namespace detail

inline Expr::Expr(Node n) {
    n.sort = detail::infer_sort(n.kind, n.field, n.children);
    node_ = std::make_shared<const Node>(std::move(n));
}

inline Expr Expr::unary(ExprKind kind, Expr operand) {
    if (kind != ExprKind::Negate && kind != ExprKind::Not && !detail::is_aggregate(kind))
        throw SortError("not a unary expression kind");
    return Expr(Node{kind, 0.0, {}, RefField::Value, {std::move(operand)}});
}

inline Expr Expr::binary(ExprKind kind, Expr lhs, Expr rhs) {
    if (!detail::is_arithmetic(kind) && !detail::is_comparison(kind) && kind != ExprKind::And
        && kind != ExprKind::Or)
        throw SortError("not a binary expression kind");
    return Expr(Node{kind, 0.0, {}, RefField::Value, {std::move(lhs), std::move(rhs)}});
}

inline Expr Expr::conditional(Expr cond, Expr then_branch, Expr else_branch) {
    return Expr(Node{ExprKind::If, 0.0, {}, RefField::Value,
                     {std::move(cond), std::move(then_branch), std::move(else_branch)}});
}

inline bool operator==(const Expr& a, const Expr& b) {
    if (a.node_ == b.node_) return true;
    if (a.kind() != b.kind() || a.number() != b.number() || a.name() != b.name() || a.field() != b.field())
        return false;
    return std::ranges::equal(a.children(), b.children());
}

/// Total order on expressions: variant tag, then children, then payload.
inline int compare(const Expr& a, const Expr& b) {
    if (a.kind() != b.kind()) return a.kind() < b.kind() ? -1 : 1;
    const auto ac = a.children();
    const auto bc = b.children();
    if (ac.size() != bc.size()) return ac.size() < bc.size() ? -1 : 1;
    for (std::size_t i = 0; i < ac.size(); ++i) {
        if (int c = compare(ac[i], bc[i]); c != 0) return c;
    }
    if (a.number() != b.number()) return a.number() < b.number() ? -1 : 1;
    if (int c = a.name().compare(b.name()); c != 0) return c < 0 ? -1 : 1;
    if (a.field() != b.field()) return a.field() < b.field() ? -1 : 1;
    return 0;
}

// ---------------------------------------------------------------------------
// Printing

namespace detail {

inline std::string format_number(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return ec == std::errc{} ? std::string(buf, end) : std::string("0");
}

inline int precedence(ExprKind k) {
    switch (k) {
        case ExprKind::If: return 0;
        case ExprKind::Or: return 1;
        case ExprKind::And: return 2;
        case ExprKind::Not: return 3;
        case ExprKind::Equal:
        case ExprKind::NotEqual:
        case ExprKind::Less:
        case ExprKind::LessEqual:
        case ExprKind::Greater:
        case ExprKind::GreaterEqual: return 4;
        case ExprKind::Add:
        case ExprKind::Subtract: return 5;
        case ExprKind::Multiply:
        case ExprKind::Divide: return 6;
        case ExprKind::Negate: return 7;
        default: return 8;
    }
}

inline std::string_view operator_token(ExprKind k) {
    switch (k) {
        case ExprKind::Add: return "+";
        case ExprKind::Subtract: return "-";
        case ExprKind::Multiply: return "*";
        case ExprKind::Divide: return "/";
        case ExprKind::Equal: return "==";
        case ExprKind::NotEqual: return "!=";
        case ExprKind::Less: return "<";
        case ExprKind::LessEqual: return "<=";
        case ExprKind::Greater: return ">";
        case ExprKind::GreaterEqual: return ">=";
        case ExprKind::And: return "and";
        case ExprKind::Or: return "or";
        case ExprKind::Sum: return "sum";
        case ExprKind::Min: return "min";
        case ExprKind::Max: return "max";
        case ExprKind::Count: return "count";
        case ExprKind::AllEqual: return "all_equal";
        default: return "?";
    }
}

inline std::string quote_text(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out += c;
        }
    }
    out += '"';
    return out;
}

inline void print_to(std::string& out, const Expr& e, int min_prec) {
    const int prec = precedence(e.kind());
    const bool parens = prec < min_prec;
    if (parens) out += '(';
    switch (e.kind()) {
        case ExprKind::Number:
            out += format_number(e.number());
            break;
        case ExprKind::Degree:
            if (e.number() == 1.0) out += "true";
            else if (e.number() == 0.0) out += "false";
            else out += "degree(" + format_number(e.number()) + ")";
            break;
        case ExprKind::Text:
            out += quote_text(e.name());
            break;
        case ExprKind::PropertyRef:
            out += "self.";
            out += e.name();
            out += '.';
            out += to_string(e.field());
            break;
        case ExprKind::Parameter:
            out += e.name();
            break;
        case ExprKind::Negate:
            out += '-';
            // A bare "-5" would reparse as a negative literal.
            if (e.child(0).kind() == ExprKind::Number) {
                out += '(';
                print_to(out, e.child(0), 0);
                out += ')';
            } else {
                print_to(out, e.child(0), prec);
            }
            break;
        case ExprKind::Not:
            out += "not ";
            print_to(out, e.child(0), prec);
            break;
        case ExprKind::Sum:
        case ExprKind::Min:
        case ExprKind::Max:
        case ExprKind::Count:
        case ExprKind::AllEqual:
            out += operator_token(e.kind());
            out += '(';
            print_to(out, e.child(0), 0);
            out += ')';
            break;
        case ExprKind::If:
            // "then" and "else" delimit the branches, so no child needs parentheses.
            out += "if ";
            print_to(out, e.child(0), 0);
            out += " then ";
            print_to(out, e.child(1), 0);
            out += " else ";
            print_to(out, e.child(2), 0);
            break;
        default: {
            // Binary, left-associative; comparisons do not chain.
            const bool chains = !is_comparison(e.kind());
            print_to(out, e.child(0), chains ? prec : prec + 1);
            out += ' ';
            out += operator_token(e.kind());
            out += ' ';
            print_to(out, e.child(1), prec + 1);
            break;
        }
    }
    if (parens) out += ')';
}

} // namespace detail

/// Canonical text with minimal parentheses. parse(print(e)) == e.
inline std::string print(const Expr& e) {
    std::string out;
    detail::print_to(out, e, 0);
    return out;
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

enum class Tok { End, Number, String, Ident, Punct };

struct Token {
    Tok type = Tok::End;
    std::string text;
    double number = 0.0;
    std::size_t line = 1;
    std::size_t column = 1;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        for (;;) {
            skip_space();
            Token t;
            t.line = line_;
            t.column = col_;
            if (pos_ >= src_.size()) {
                out.push_back(t);
                return out;
            }
            const char c = src_[pos_];
            if (std::isdigit(static_cast<unsigned char>(c))
                || (c == '.' && pos_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
                lex_number(t);
            } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                std::size_t start = pos_;
                while (pos_ < src_.size()
                       && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                    advance(1);
                t.type = Tok::Ident;
                t.text = std::string(src_.substr(start, pos_ - start));
            } else if (c == '"') {
                lex_string(t);
            } else {
                lex_punct(t);
            }
            out.push_back(std::move(t));
        }
    }

private:
    void advance(std::size_t n) {
        for (std::size_t i = 0; i < n && pos_ < src_.size(); ++i) {
            const unsigned char c = static_cast<unsigned char>(src_[pos_++]);
            if (c == '\n') {
                ++line_;
                col_ = 1;
            } else if ((c & 0xC0) != 0x80) {
                ++col_;
            }
        }
    }

    void skip_space() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) advance(1);
    }

    [[noreturn]] void fail(const std::string& msg, const Token& at) const {
        throw SyntaxError(msg, at.line, at.column);
    }

    void lex_number(Token& t) {
        std::size_t end = pos_;
        auto digits = [&] {
            while (end < src_.size() && std::isdigit(static_cast<unsigned char>(src_[end]))) ++end;
        };
        digits();
        if (end < src_.size() && src_[end] == '.') {
            ++end;
            digits();
        }
        if (end < src_.size() && (src_[end] == 'e' || src_[end] == 'E')) {
            std::size_t exp = end + 1;
            if (exp < src_.size() && (src_[exp] == '+' || src_[exp] == '-')) ++exp;
            if (exp < src_.size() && std::isdigit(static_cast<unsigned char>(src_[exp]))) {
                end = exp;
                digits();
            }
        }
        const std::string_view text = src_.substr(pos_, end - pos_);
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v))
            fail("malformed number '" + std::string(text) + "'", t);
        t.type = Tok::Number;
        t.number = v;
        t.text = std::string(text);
        advance(end - pos_);
    }

    void lex_string(Token& t) {
        advance(1);
        std::string value;
        for (;;) {
            if (pos_ >= src_.size()) fail("unterminated string literal", t);
            const char c = src_[pos_];
            if (c == '"') {
                advance(1);
                break;
            }
            if (c == '\\') {
                if (pos_ + 1 >= src_.size()) fail("unterminated string literal", t);
                const char n = src_[pos_ + 1];
                switch (n) {
                    case '"': value += '"'; break;
                    case '\\': value += '\\'; break;
                    case 'n': value += '\n'; break;
                    case 't': value += '\t'; break;
                    default: fail(std::string("unknown escape '\\") + n + "'", t);
                }
                advance(2);
                continue;
            }
            value += c;
            advance(1);
        }
        t.type = Tok::String;
        t.text = std::move(value);
    }

    void lex_punct(Token& t) {
        static constexpr std::pair<std::string_view, std::string_view> table[] = {
            {"==", "=="}, {"!=", "!="}, {"<=", "<="}, {">=", ">="},
            {"\xC3\x97", "*"},     // ×
            {"\xC3\xB7", "/"},     // ÷
            {"\xE2\x89\xA0", "!="}, // ≠
            {"\xE2\x89\xA4", "<="}, // ≤
            {"\xE2\x89\xA5", ">="}, // ≥
            {"=", "=="}, {"<", "<"}, {">", ">"}, {"+", "+"}, {"-", "-"}, {"*", "*"}, {"/", "/"},
            {"(", "("}, {")", ")"}, {",", ","}, {".", "."},
        };
        const std::string_view rest = src_.substr(pos_);
        for (const auto& [spelling, canonical] : table) {
            if (rest.starts_with(spelling)) {
                t.type = Tok::Punct;
                t.text = std::string(canonical);
                advance(spelling.size());
                return;
            }
        }
        fail("unexpected character '" + std::string(1, src_[pos_]) + "'", t);
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::size_t col_ = 1;
};

class Parser {
public:
    explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    Expr parse_all() {
        Expr e = parse_expr();
        if (peek().type != Tok::End) fail("unexpected " + describe(peek()));
        return e;
    }

private:
    const Token& peek() const { return toks_[pos_]; }
    const Token& next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

    bool at_punct(std::string_view p) const { return peek().type == Tok::Punct && peek().text == p; }
    bool at_word(std::string_view w) const { return peek().type == Tok::Ident && peek().text == w; }

    static std::string describe(const Token& t) {
        switch (t.type) {
            case Tok::End: return "end of input";
            case Tok::String: return "string literal";
            default: return "'" + t.text + "'";
        }
    }

    [[noreturn]] void fail(const std::string& msg) const { fail_at(msg, peek()); }
    [[noreturn]] static void fail_at(const std::string& msg, const Token& t) {
        throw SyntaxError(msg, t.line, t.column);
    }

    void expect_punct(std::string_view p) {
        if (!at_punct(p)) fail("expected '" + std::string(p) + "', found " + describe(peek()));
        next();
    }
    void expect_word(std::string_view w) {
        if (!at_word(w)) fail("expected '" + std::string(w) + "', found " + describe(peek()));
        next();
    }

    template <class F>
    static Expr build(const Token& at, F&& f) {
        try {
            return f();
        } catch (const SortError& err) {
            fail_at(err.what(), at);
        }
    }

    Expr parse_expr() {
        if (at_word("if")) {
            const Token at = next();
            Expr c = parse_expr();
            expect_word("then");
            Expr a = parse_expr();
            expect_word("else");
            Expr b = parse_expr();
            return build(at, [&] { return Expr::conditional(c, a, b); });
        }
        return parse_or();
    }

    Expr parse_or() {
        Expr lhs = parse_and();
        while (at_word("or")) {
            const Token at = next();
            Expr rhs = parse_operand([this] { return parse_and(); }, at);
            lhs = build(at, [&] { return Expr::binary(ExprKind::Or, lhs, rhs); });
        }
        return lhs;
    }

    Expr parse_and() {
        Expr lhs = parse_not();
        while (at_word("and")) {
            const Token at = next();
            Expr rhs = parse_operand([this] { return parse_not(); }, at);
            lhs = build(at, [&] { return Expr::binary(ExprKind::And, lhs, rhs); });
        }
        return lhs;
    }

    Expr parse_not() {
        if (at_word("not")) {
            const Token at = next();
            Expr operand = parse_operand([this] { return parse_not(); }, at);
            return build(at, [&] { return Expr::unary(ExprKind::Not, operand); });
        }
        return parse_cmp();
    }

    template <class F>
    Expr parse_operand(F&& f, const Token& op) {
        if (peek().type == Tok::End) fail("expected expression after " + describe(op));
        return f();
    }

    static ExprKind comparison_kind(std::string_view p) {
        if (p == "==") return ExprKind::Equal;
        if (p == "!=") return ExprKind::NotEqual;
        if (p == "<") return ExprKind::Less;
        if (p == "<=") return ExprKind::LessEqual;
        if (p == ">") return ExprKind::Greater;
        return ExprKind::GreaterEqual;
    }

    Expr parse_cmp() {
        Expr lhs = parse_additive();
        if (peek().type == Tok::Punct
            && (at_punct("==") || at_punct("!=") || at_punct("<") || at_punct("<=") || at_punct(">")
                || at_punct(">="))) {
            const Token at = next();
            Expr rhs = parse_operand([this] { return parse_additive(); }, at);
            return build(at, [&] { return Expr::binary(comparison_kind(at.text), lhs, rhs); });
        }
        return lhs;
    }

    Expr parse_additive() {
        Expr lhs = parse_term();
        while (at_punct("+") || at_punct("-")) {
            const Token at = next();
            Expr rhs = parse_operand([this] { return parse_term(); }, at);
            const ExprKind k = at.text == "+" ? ExprKind::Add : ExprKind::Subtract;
            lhs = build(at, [&] { return Expr::binary(k, lhs, rhs); });
        }
        return lhs;
    }

    Expr parse_term() {
        Expr lhs = parse_unary();
        while (at_punct("*") || at_punct("/")) {
            const Token at = next();
            Expr rhs = parse_operand([this] { return parse_unary(); }, at);
            const ExprKind k = at.text == "*" ? ExprKind::Multiply : ExprKind::Divide;
            lhs = build(at, [&] { return Expr::binary(k, lhs, rhs); });
        }
        return lhs;
    }

    Expr parse_unary() {
        if (at_punct("-")) {
            const Token at = next();
            if (peek().type == Tok::Number) {
                const double v = next().number;
                return build(at, [&] { return Expr::number(-v); });
            }
            Expr operand = parse_operand([this] { return parse_unary(); }, at);
            return build(at, [&] { return Expr::unary(ExprKind::Negate, operand); });
        }
        return parse_primary();
    }

    static std::optional<ExprKind> function_kind(std::string_view name) {
        if (name == "sum") return ExprKind::Sum;
        if (name == "min") return ExprKind::Min;
        if (name == "max") return ExprKind::Max;
        if (name == "count") return ExprKind::Count;
        if (name == "all_equal") return ExprKind::AllEqual;
        return std::nullopt;
    }

    Expr parse_primary() {
        const Token& t = peek();
        switch (t.type) {
            case Tok::End:
                fail("expected expression, found end of input");
            case Tok::Number: {
                const double v = next().number;
                return Expr::number(v);
            }
            case Tok::String:
                return Expr::text(next().text);
            case Tok::Punct:
                if (at_punct("(")) {
                    next();
                    Expr inner = parse_expr();
                    expect_punct(")");
                    return inner;
                }
                fail("expected expression, found " + describe(t));
            case Tok::Ident:
                break;
        }
        const Token at = next();
        const std::string& word = at.text;
        if (word == "true") return Expr::degree(1.0);
        if (word == "false") return Expr::degree(0.0);
        if (word == "degree") {
            expect_punct("(");
            if (peek().type != Tok::Number) fail("degree(...) takes a number literal");
            const Token lit = next();
            expect_punct(")");
            return build(lit, [&] { return Expr::degree(lit.number); });
        }
        if (word == "self") {
            expect_punct(".");
            if (peek().type != Tok::Ident) fail("expected property name after 'self.'");
            const std::string prop = next().text;
            expect_punct(".");
            if (peek().type != Tok::Ident) fail("expected value, units, values or count");
            const Token f = next();
            RefField field;
            if (f.text == "value") field = RefField::Value;
            else if (f.text == "units") field = RefField::Units;
            else if (f.text == "values") field = RefField::Values;
            else if (f.text == "count") field = RefField::Count;
            else fail_at("unknown property field '" + f.text + "'", f);
            return Expr::property(prop, field);
        }
        if (is_reserved_word(word)) fail_at("unexpected keyword '" + word + "'", at);
        if (at_punct("(")) {
            const auto kind = function_kind(word);
            if (!kind) fail_at("unknown function '" + word + "'", at);
            next();
            std::vector<Expr> args;
            if (!at_punct(")")) {
                args.push_back(parse_expr());
                while (at_punct(",")) {
                    next();
                    args.push_back(parse_expr());
                }
            }
            expect_punct(")");
            if (args.size() != 1)
                fail_at("function '" + word + "' takes 1 argument, got " + std::to_string(args.size()), at);
            return build(at, [&] { return Expr::unary(*kind, args[0]); });
        }
        return Expr::parameter(word);
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

} // namespace detail

/// Parses expression text. Throws SyntaxError with line/column.
inline Expr parse(std::string_view source) {
    return detail::Parser(detail::Lexer(source).run()).parse_all();
}

// ---------------------------------------------------------------------------
// Evaluation

/// A fuzzy truth degree in [0,1], kept distinct from plain numbers.
struct Degree {
    double value = 0.0;
    friend bool operator==(const Degree&, const Degree&) = default;
};

using Value = std::variant<double, Degree, std::string, NumberList>;

/// Named numeric arguments bound to method parameters.
using Arguments = std::map<std::string, double, std::less<>>;

template <QuantitySource Subject = NoSubject>
struct EvalContext {
    const Subject* subject = nullptr;
    Arguments arguments;
};

namespace detail {

template <QuantitySource Subject>
class Evaluator {
public:
    explicit Evaluator(const EvalContext<Subject>& ctx) : ctx_(ctx) {}

    Value eval(const Expr& e) const {
        switch (e.kind()) {
            case ExprKind::Number: return e.number();
            case ExprKind::Degree: return Degree{e.number()};
            case ExprKind::Text: return e.name();
            case ExprKind::PropertyRef: return reference(e);
            case ExprKind::Parameter: {
                auto it = ctx_.arguments.find(e.name());
                if (it == ctx_.arguments.end()) fail("unbound parameter '" + e.name() + "'", e);
                return it->second;
            }
            case ExprKind::Negate: return -num(e.child(0));
            case ExprKind::Add: return num(e.child(0)) + num(e.child(1));
            case ExprKind::Subtract: return num(e.child(0)) - num(e.child(1));
            case ExprKind::Multiply: return num(e.child(0)) * num(e.child(1));
            case ExprKind::Divide: {
                const double l = num(e.child(0));
                const double r = num(e.child(1));
                if (r == 0.0) fail("division by zero", e);
                return l / r;
            }
            case ExprKind::Equal:
            case ExprKind::NotEqual:
            case ExprKind::Less:
            case ExprKind::LessEqual:
            case ExprKind::Greater:
            case ExprKind::GreaterEqual: return Degree{compare_values(e) ? 1.0 : 0.0};
            case ExprKind::And: return Degree{std::min(deg(e.child(0)), deg(e.child(1)))};
            case ExprKind::Or: return Degree{std::max(deg(e.child(0)), deg(e.child(1)))};
            case ExprKind::Not: return Degree{1.0 - deg(e.child(0))};
            case ExprKind::Sum: {
                double s = 0.0;
                for (double v : list(e.child(0))) s += v;
                return s;
            }
            case ExprKind::Min:
            case ExprKind::Max: {
                const NumberList xs = list(e.child(0));
                if (xs.empty()) fail("empty list", e);
                return e.kind() == ExprKind::Min ? *std::ranges::min_element(xs) : *std::ranges::max_element(xs);
            }
            case ExprKind::Count: return static_cast<double>(list(e.child(0)).size());
            case ExprKind::AllEqual: {
                const NumberList xs = list(e.child(0));
                const bool same = std::ranges::adjacent_find(xs, std::ranges::not_equal_to{}) == xs.end();
                return Degree{same ? 1.0 : 0.0};
            }
            case ExprKind::If: return deg(e.child(0)) >= 1.0 ? eval(e.child(1)) : eval(e.child(2));
        }
        fail("unknown expression kind", e);
    }

private:
    [[noreturn]] static void fail(const std::string& msg, const Expr& e) { throw EvalError(msg, print(e)); }

    double num(const Expr& e) const {
        Value v = eval(e);
        if (auto* d = std::get_if<double>(&v)) return *d;
        fail("expected a number", e);
    }
    double deg(const Expr& e) const {
        Value v = eval(e);
        if (auto* d = std::get_if<Degree>(&v)) return d->value;
        fail("expected a degree", e);
    }
    NumberList list(const Expr& e) const {
        Value v = eval(e);
        if (auto* l = std::get_if<NumberList>(&v)) return std::move(*l);
        fail("expected a list of numbers", e);
    }

    bool compare_values(const Expr& e) const {
        const Value l = eval(e.child(0));
        const Value r = eval(e.child(1));
        if (l.index() != r.index()) fail("sort mismatch", e);
        auto cmp = [&](const auto& a, const auto& b) {
            switch (e.kind()) {
                case ExprKind::Equal: return a == b;
                case ExprKind::NotEqual: return a != b;
                case ExprKind::Less: return a < b;
                case ExprKind::LessEqual: return a <= b;
                case ExprKind::Greater: return a > b;
                default: return a >= b;
            }
        };
        if (auto* a = std::get_if<double>(&l)) return cmp(*a, std::get<double>(r));
        if (auto* a = std::get_if<std::string>(&l)) return cmp(*a, std::get<std::string>(r));
        fail("comparison needs numbers or text", e);
    }

    Value reference(const Expr& e) const {
        const QuantitativeProperty* p = ctx_.subject ? ctx_.subject->find_quantitative(e.name()) : nullptr;
        if (!p) fail("unresolved reference to quantitative property '" + e.name() + "'", e);
        if (e.field() == RefField::Units) return p->units;
        if (!p->value) fail("property '" + e.name() + "' has no value", e);
        const Magnitude& m = *p->value;
        switch (e.field()) {
            case RefField::Value:
                if (auto* d = std::get_if<double>(&m)) return *d;
                fail("property '" + e.name() + "' is list-valued; use .values", e);
            case RefField::Values:
                if (auto* l = std::get_if<NumberList>(&m)) return *l;
                return NumberList{std::get<double>(m)};
            case RefField::Count:
                if (auto* l = std::get_if<NumberList>(&m)) return static_cast<double>(l->size());
                return 1.0;
            case RefField::Units: break;
        }
        fail("unknown field", e);
    }

    const EvalContext<Subject>& ctx_;
};

} // namespace detail

/// Evaluates under fuzzy semantics: and = min, or = max, not x = 1 - x;
/// comparisons yield degree 1 or 0. Throws EvalError naming the node.
template <QuantitySource Subject>
Value evaluate(const Expr& e, const EvalContext<Subject>& ctx) {
    return detail::Evaluator<Subject>(ctx).eval(e);
}

inline Value evaluate(const Expr& e) {
    return evaluate(e, EvalContext<NoSubject>{});
}

/// Evaluates and requires a degree result.
template <QuantitySource Subject>
double evaluate_degree(const Expr& e, const EvalContext<Subject>& ctx) {
    Value v = evaluate(e, ctx);
    if (auto* d = std::get_if<Degree>(&v)) return d->value;
    throw EvalError("verification expression must yield a degree", print(e));
}

// ---------------------------------------------------------------------------
// Normal form

namespace detail {

inline std::optional<Expr> fold_constant(const Expr& e) {
    if (e.is_literal() || e.children().empty()) return std::nullopt;
    if (e.kind() == ExprKind::If) {
        if (e.child(0).kind() != ExprKind::Degree) return std::nullopt;
        return e.child(0).number() >= 1.0 ? e.child(1) : e.child(2);
    }
    if (!std::ranges::all_of(e.children(), [](const Expr& c) { return c.is_literal(); })) return std::nullopt;
    try {
        const Value v = evaluate(e);
        if (auto* d = std::get_if<double>(&v)) {
            if (!std::isfinite(*d)) return std::nullopt;
            return Expr::number(*d);
        }
        if (auto* g = std::get_if<Degree>(&v)) return Expr::degree(g->value);
    } catch (const EvalError&) {
        // Division by zero stays in the tree and fails at evaluation time.
    }
    return std::nullopt;
}

inline Expr rebuild(const Expr& e, std::vector<Expr> kids) {
    switch (e.children().size()) {
        case 1: return Expr::unary(e.kind(), std::move(kids[0]));
        case 2: return Expr::binary(e.kind(), std::move(kids[0]), std::move(kids[1]));
        case 3: return Expr::conditional(std::move(kids[0]), std::move(kids[1]), std::move(kids[2]));
        default: return e;
    }
}

} // namespace detail

/// Canonical form: children normalized, constants folded, double negation
/// removed, operands of commutative operators sorted by compare().
/// Idempotent.
inline Expr normalize(const Expr& e) {
    if (e.children().empty()) return e;
    std::vector<Expr> kids;
    kids.reserve(e.children().size());
    for (const auto& c : e.children()) kids.push_back(normalize(c));

    if ((e.kind() == ExprKind::Not || e.kind() == ExprKind::Negate) && kids[0].kind() == e.kind())
        return kids[0].child(0);
    if (detail::is_commutative(e.kind()) && compare(kids[1], kids[0]) < 0) std::swap(kids[0], kids[1]);

    Expr out = detail::rebuild(e, std::move(kids));
    if (auto folded = detail::fold_constant(out)) return *folded;
    return out;
}

/// Decidable expression equivalence: equality of normal forms.
inline bool expr_equal(const Expr& a, const Expr& b) {
    return normalize(a) == normalize(b);
}

} // namespace oodn
