#include "medc/expression.hpp"
#include "medc/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>

namespace medc {

namespace {

struct Overflow {}; // internal: triggers the long-double fallback

__int128 gcd128(__int128 a, __int128 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
        __int128 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

__int128 checked_mul(__int128 a, __int128 b) {
    __int128 r;
    if (__builtin_mul_overflow(a, b, &r)) throw Overflow{};
    return r;
}

__int128 checked_add(__int128 a, __int128 b) {
    __int128 r;
    if (__builtin_add_overflow(a, b, &r)) throw Overflow{};
    return r;
}

Rational rat_add(Rational a, Rational b) {
    Rational r{checked_add(checked_mul(a.num, b.den), checked_mul(b.num, a.den)),
               checked_mul(a.den, b.den)};
    r.reduce();
    return r;
}

Rational rat_sub(Rational a, Rational b) {
    b.num = -b.num;
    return rat_add(a, b);
}

Rational rat_mul(Rational a, Rational b) {
    Rational r{checked_mul(a.num, b.num), checked_mul(a.den, b.den)};
    r.reduce();
    return r;
}

Rational rat_div(Rational a, Rational b) {
    if (b.num == 0) throw DivisionByZeroError("expression: division by zero");
    Rational r{checked_mul(a.num, b.den), checked_mul(a.den, b.num)};
    r.reduce();
    return r;
}

std::string int128_to_string(__int128 v) {
    if (v == 0) return "0";
    bool neg = v < 0;
    unsigned __int128 u = neg ? static_cast<unsigned __int128>(-(v + 1)) + 1 : static_cast<unsigned __int128>(v);
    std::string s;
    while (u > 0) {
        s.push_back(static_cast<char>('0' + static_cast<int>(u % 10)));
        u /= 10;
    }
    if (neg) s.push_back('-');
    std::reverse(s.begin(), s.end());
    return s;
}

} // namespace

void Rational::reduce() {
    if (den == 0) throw DivisionByZeroError("expression: zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    __int128 g = gcd128(num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
    if (num == 0) den = 1;
}

Rational Rational::from_decimal(const std::string& text) {
    size_t i = 0;
    bool neg = false;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
        neg = text[i] == '-';
        ++i;
    }
    std::string digits, frac;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) digits.push_back(text[i++]);
    if (i < text.size() && (text[i] == '.' || text[i] == ',')) {
        ++i;
        while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) frac.push_back(text[i++]);
    }
    if (digits.empty() && frac.empty()) throw ParseError("not a decimal number: \"" + text + "\"");
    if (i != text.size()) throw ParseError("not a decimal number: \"" + text + "\"");

    Rational r;
    try {
        for (char c : digits) r.num = checked_add(checked_mul(r.num, 10), c - '0');
        for (char c : frac) {
            r.num = checked_add(checked_mul(r.num, 10), c - '0');
            r.den = checked_mul(r.den, 10);
        }
    } catch (const Overflow&) {
        throw ParseError("decimal number out of range: \"" + text + "\"");
    }
    if (neg) r.num = -r.num;
    r.reduce();
    return r;
}

struct Expression::Node {
    enum class Kind { Number, Placeholder, Add, Sub, Mul, Div, Neg };
    Kind kind;
    Rational value;      // Number
    std::string lexeme;  // Number: normalized source text ('.' decimal point)
    std::string name;    // Placeholder
    std::shared_ptr<const Node> lhs, rhs;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Kind = Expression::Node::Kind;

NodePtr make_number(Rational v, std::string lexeme) {
    auto n = std::make_shared<Expression::Node>();
    n->kind = Kind::Number;
    n->value = v;
    n->lexeme = std::move(lexeme);
    return n;
}

NodePtr make_binary(Kind k, NodePtr l, NodePtr r) {
    auto n = std::make_shared<Expression::Node>();
    n->kind = k;
    n->lhs = std::move(l);
    n->rhs = std::move(r);
    return n;
}

struct Token {
    enum class Type { Number, Placeholder, Plus, Minus, Star, Slash, LParen, RParen, End };
    Type type;
    std::string text; // literal or placeholder name
    size_t pos;
};

class Lexer {
public:
    explicit Lexer(const std::string& s) : s_(s) {}

    Token next() {
        while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
        size_t start = i_;
        if (i_ >= s_.size()) return {Token::Type::End, "", start};
        char c = s_[i_];
        if (c == '+') { ++i_; return {Token::Type::Plus, "+", start}; }
        if (c == '-') { ++i_; return {Token::Type::Minus, "-", start}; }
        if (c == '*') { ++i_; return {Token::Type::Star, "*", start}; }
        if (c == '/') { ++i_; return {Token::Type::Slash, "/", start}; }
        if (c == '(') { ++i_; return {Token::Type::LParen, "(", start}; }
        if (c == ')') { ++i_; return {Token::Type::RParen, ")", start}; }
        // U+00D7 multiplication sign
        if (static_cast<unsigned char>(c) == 0xC3 && i_ + 1 < s_.size() &&
            static_cast<unsigned char>(s_[i_ + 1]) == 0x97) {
            i_ += 2;
            return {Token::Type::Star, "*", start};
        }
        // U+2212 minus sign
        if (static_cast<unsigned char>(c) == 0xE2 && i_ + 2 < s_.size() &&
            static_cast<unsigned char>(s_[i_ + 1]) == 0x88 &&
            static_cast<unsigned char>(s_[i_ + 2]) == 0x92) {
            i_ += 3;
            return {Token::Type::Minus, "-", start};
        }
        if (c == '{') {
            if (i_ + 1 >= s_.size() || s_[i_ + 1] != '#') {
                throw ExpressionSyntaxError(err("expected {#Name} placeholder"));
            }
            i_ += 2;
            std::string name;
            while (i_ < s_.size() && s_[i_] != '}') name.push_back(s_[i_++]);
            if (i_ >= s_.size()) throw ExpressionSyntaxError(err("unterminated placeholder"));
            ++i_;
            if (name.empty()) throw ExpressionSyntaxError(err("empty placeholder name"));
            return {Token::Type::Placeholder, name, start};
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::string lit;
            while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) lit.push_back(s_[i_++]);
            if (i_ < s_.size() && (s_[i_] == '.' || s_[i_] == ',')) {
                // ',' is a decimal separator only when digits follow
                if (i_ + 1 < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_ + 1]))) {
                    lit.push_back('.');
                    ++i_;
                    while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) lit.push_back(s_[i_++]);
                }
            }
            return {Token::Type::Number, lit, start};
        }
        throw ExpressionSyntaxError(err(std::string("unexpected character '") + c + "'"));
    }

    std::string err(const std::string& what) const {
        return "expression: " + what + " at position " + std::to_string(i_) + " in \"" + s_ + "\"";
    }

private:
    const std::string& s_;
    size_t i_ = 0;
};

class Parser {
public:
    explicit Parser(const std::string& s) : lex_(s), src_(s) { advance(); }

    NodePtr parse(std::vector<std::string>& names) {
        NodePtr e = expr();
        if (tok_.type != Token::Type::End) {
            throw ExpressionSyntaxError("expression: trailing input at position " +
                                        std::to_string(tok_.pos) + " in \"" + src_ + "\"");
        }
        names = names_;
        return e;
    }

private:
    void advance() { tok_ = lex_.next(); }

    NodePtr expr() {
        NodePtr e = term();
        while (tok_.type == Token::Type::Plus || tok_.type == Token::Type::Minus) {
            Kind k = tok_.type == Token::Type::Plus ? Kind::Add : Kind::Sub;
            advance();
            e = make_binary(k, e, term());
        }
        return e;
    }

    NodePtr term() {
        NodePtr e = unary();
        while (tok_.type == Token::Type::Star || tok_.type == Token::Type::Slash) {
            Kind k = tok_.type == Token::Type::Star ? Kind::Mul : Kind::Div;
            advance();
            e = make_binary(k, e, unary());
        }
        return e;
    }

    NodePtr unary() {
        if (tok_.type == Token::Type::Minus) {
            advance();
            auto n = std::make_shared<Expression::Node>();
            n->kind = Kind::Neg;
            n->lhs = unary();
            return n;
        }
        return atom();
    }

    NodePtr atom() {
        if (tok_.type == Token::Type::Number) {
            Rational v = Rational::from_decimal(tok_.text);
            NodePtr n = make_number(v, tok_.text);
            advance();
            return n;
        }
        if (tok_.type == Token::Type::Placeholder) {
            auto n = std::make_shared<Expression::Node>();
            n->kind = Kind::Placeholder;
            n->name = tok_.text;
            if (std::find(names_.begin(), names_.end(), n->name) == names_.end()) {
                names_.push_back(n->name);
            }
            advance();
            return n;
        }
        if (tok_.type == Token::Type::LParen) {
            advance();
            NodePtr e = expr();
            if (tok_.type != Token::Type::RParen) {
                throw ExpressionSyntaxError("expression: missing ')' at position " +
                                            std::to_string(tok_.pos) + " in \"" + src_ + "\"");
            }
            advance();
            return e;
        }
        throw ExpressionSyntaxError("expression: expected number, placeholder or '(' at position " +
                                    std::to_string(tok_.pos) + " in \"" + src_ + "\"");
    }

    Lexer lex_;
    const std::string& src_;
    Token tok_;
    std::vector<std::string> names_;
};

Rational eval_rational(const Expression::Node& n, const Rational& x) {
    switch (n.kind) {
        case Kind::Number: return n.value;
        case Kind::Placeholder: return x;
        case Kind::Add: return rat_add(eval_rational(*n.lhs, x), eval_rational(*n.rhs, x));
        case Kind::Sub: return rat_sub(eval_rational(*n.lhs, x), eval_rational(*n.rhs, x));
        case Kind::Mul: return rat_mul(eval_rational(*n.lhs, x), eval_rational(*n.rhs, x));
        case Kind::Div: return rat_div(eval_rational(*n.lhs, x), eval_rational(*n.rhs, x));
        case Kind::Neg: {
            Rational v = eval_rational(*n.lhs, x);
            v.num = -v.num;
            return v;
        }
    }
    throw std::logic_error("unreachable");
}

long double eval_ld(const Expression::Node& n, long double x) {
    switch (n.kind) {
        case Kind::Number: return static_cast<long double>(n.value.num) / static_cast<long double>(n.value.den);
        case Kind::Placeholder: return x;
        case Kind::Add: return eval_ld(*n.lhs, x) + eval_ld(*n.rhs, x);
        case Kind::Sub: return eval_ld(*n.lhs, x) - eval_ld(*n.rhs, x);
        case Kind::Mul: return eval_ld(*n.lhs, x) * eval_ld(*n.rhs, x);
        case Kind::Div: {
            long double d = eval_ld(*n.rhs, x);
            if (d == 0.0L) throw DivisionByZeroError("expression: division by zero");
            return eval_ld(*n.lhs, x) / d;
        }
        case Kind::Neg: return -eval_ld(*n.lhs, x);
    }
    throw std::logic_error("unreachable");
}

// affine form a*x + b, or nullopt if not affine
std::optional<std::pair<Rational, Rational>> linear_of(const Expression::Node& n) {
    using P = std::pair<Rational, Rational>;
    switch (n.kind) {
        case Kind::Number: return P{Rational{0, 1}, n.value};
        case Kind::Placeholder: return P{Rational{1, 1}, Rational{0, 1}};
        case Kind::Add: {
            auto l = linear_of(*n.lhs), r = linear_of(*n.rhs);
            if (!l || !r) return std::nullopt;
            return P{rat_add(l->first, r->first), rat_add(l->second, r->second)};
        }
        case Kind::Sub: {
            auto l = linear_of(*n.lhs), r = linear_of(*n.rhs);
            if (!l || !r) return std::nullopt;
            return P{rat_sub(l->first, r->first), rat_sub(l->second, r->second)};
        }
        case Kind::Mul: {
            auto l = linear_of(*n.lhs), r = linear_of(*n.rhs);
            if (!l || !r) return std::nullopt;
            if (l->first.num == 0) return P{rat_mul(l->second, r->first), rat_mul(l->second, r->second)};
            if (r->first.num == 0) return P{rat_mul(r->second, l->first), rat_mul(r->second, l->second)};
            return std::nullopt; // x*x is not affine
        }
        case Kind::Div: {
            auto l = linear_of(*n.lhs), r = linear_of(*n.rhs);
            if (!l || !r) return std::nullopt;
            if (r->first.num != 0 || r->second.num == 0) return std::nullopt;
            return P{rat_div(l->first, r->second), rat_div(l->second, r->second)};
        }
        case Kind::Neg: {
            auto l = linear_of(*n.lhs);
            if (!l) return std::nullopt;
            return P{rat_sub(Rational{0, 1}, l->first), rat_sub(Rational{0, 1}, l->second)};
        }
    }
    return std::nullopt;
}

int precedence(Kind k) {
    switch (k) {
        case Kind::Add:
        case Kind::Sub: return 1;
        case Kind::Mul:
        case Kind::Div: return 2;
        case Kind::Neg: return 3;
        default: return 4;
    }
}

// decimal text for terminating rationals, fraction text otherwise
std::string render_rational(const Rational& r, bool xpath) {
    __int128 den = r.den;
    int twos = 0, fives = 0;
    while (den % 2 == 0) { den /= 2; ++twos; }
    while (den % 5 == 0) { den /= 5; ++fives; }
    if (den == 1) {
        int digits = std::max(twos, fives);
        if (digits == 0) return int128_to_string(r.num);
        try {
            __int128 scale = 1;
            for (int i = 0; i < digits; ++i) scale = checked_mul(scale, 10);
            __int128 scaled = checked_mul(r.num, scale / r.den);
            std::string s = int128_to_string(scaled < 0 ? -scaled : scaled);
            if (s.size() <= static_cast<size_t>(digits)) s.insert(0, digits + 1 - s.size(), '0');
            s.insert(s.size() - digits, ".");
            while (s.back() == '0') s.pop_back();
            if (s.back() == '.') s.pop_back();
            return (r.num < 0 ? "-" : "") + s;
        } catch (const Overflow&) {
            // fall through to fraction form
        }
    }
    std::string op = xpath ? " div " : "/";
    return "(" + int128_to_string(r.num) + op + int128_to_string(r.den) + ")";
}

void render(const Expression::Node& n, bool xpath, const std::string& operand, std::string& out) {
    auto child = [&](const Expression::Node& c, bool needs_parens) {
        if (needs_parens) out.push_back('(');
        render(c, xpath, operand, out);
        if (needs_parens) out.push_back(')');
    };
    switch (n.kind) {
        case Kind::Number:
            if (!n.lexeme.empty()) {
                out += n.lexeme;
            } else {
                out += render_rational(n.value, xpath);
            }
            return;
        case Kind::Placeholder:
            out += xpath ? operand : "{#" + n.name + "}";
            return;
        case Kind::Neg:
            out.push_back('-');
            child(*n.lhs, precedence(n.lhs->kind) < precedence(Kind::Neg));
            return;
        default: {
            int p = precedence(n.kind);
            child(*n.lhs, precedence(n.lhs->kind) < p);
            switch (n.kind) {
                case Kind::Add: out += " + "; break;
                case Kind::Sub: out += " - "; break;
                case Kind::Mul: out += " * "; break;
                case Kind::Div: out += xpath ? " div " : " / "; break;
                default: break;
            }
            // right side of - and / re-parenthesizes equal precedence
            bool rp = precedence(n.rhs->kind) < p ||
                      (precedence(n.rhs->kind) == p && (n.kind == Kind::Sub || n.kind == Kind::Div));
            child(*n.rhs, rp);
            return;
        }
    }
}

} // namespace

Expression Expression::parse(const std::string& text) {
    Expression e;
    Parser p(text);
    e.root_ = p.parse(e.names_);
    return e;
}

const std::vector<std::string>& Expression::placeholders() const {
    return names_;
}

std::string format_decimal(const Rational& r, int round_digits) {
    try {
        __int128 scale = 1;
        for (int i = 0; i < round_digits; ++i) scale = checked_mul(scale, 10);
        __int128 num = r.num < 0 ? -r.num : r.num;
        __int128 scaled = checked_mul(num, scale);
        __int128 q = scaled / r.den;
        __int128 rem = scaled % r.den;
        if (rem >= r.den - rem) q += 1; // half-up, away from zero
        std::string digits = int128_to_string(q);
        if (digits.size() <= static_cast<size_t>(round_digits)) {
            digits.insert(0, round_digits + 1 - digits.size(), '0');
        }
        std::string frac = digits.substr(digits.size() - round_digits);
        std::string intpart = digits.substr(0, digits.size() - round_digits);
        while (!frac.empty() && frac.back() == '0') frac.pop_back();
        std::string s = intpart;
        if (!frac.empty()) s += "." + frac;
        if (r.num < 0 && s != "0") s.insert(0, "-");
        return s;
    } catch (const Overflow&) {
        long double v = static_cast<long double>(r.num) / static_cast<long double>(r.den);
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.*Lf", round_digits, v);
        std::string s(buf);
        if (s.find('.') != std::string::npos) {
            while (s.back() == '0') s.pop_back();
            if (s.back() == '.') s.pop_back();
        }
        return s == "-0" ? "0" : s;
    }
}

std::string Expression::evaluate(const std::string& value, int round_digits) const {
    Rational x = Rational::from_decimal(value);
    try {
        Rational r = eval_rational(*root_, x);
        return format_decimal(r, round_digits);
    } catch (const Overflow&) {
        long double v = eval_ld(*root_, static_cast<long double>(x.num) / static_cast<long double>(x.den));
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.*Lf", round_digits, v);
        std::string s(buf);
        if (s.find('.') != std::string::npos) {
            while (s.back() == '0') s.pop_back();
            if (s.back() == '.') s.pop_back();
        }
        return s == "-0" ? "0" : s;
    }
}

long double Expression::evaluate_ld(long double value) const {
    return eval_ld(*root_, value);
}

std::optional<std::pair<Rational, Rational>> Expression::linear_form() const {
    try {
        return linear_of(*root_);
    } catch (const Overflow&) {
        return std::nullopt;
    } catch (const DivisionByZeroError&) {
        return std::nullopt;
    }
}

Expression Expression::invert_linear() const {
    auto lf = linear_form();
    if (!lf || lf->first.num == 0) {
        throw ExpressionSyntaxError("expression: not invertible (not linear or zero slope): \"" + render_text() + "\"");
    }
    Rational a = lf->first, b = lf->second;

    auto ph = std::make_shared<Node>();
    ph->kind = Node::Kind::Placeholder;
    ph->name = names_.empty() ? std::string("x") : names_.front();

    NodePtr top = ph;
    if (b.num > 0) {
        top = make_binary(Node::Kind::Sub, top, make_number(b, ""));
    } else if (b.num < 0) {
        Rational nb = b;
        nb.num = -nb.num;
        top = make_binary(Node::Kind::Add, top, make_number(nb, ""));
    }
    if (!(a.num == 1 && a.den == 1)) {
        top = make_binary(Node::Kind::Div, top, make_number(a, ""));
    }

    Expression e;
    e.root_ = top;
    e.names_ = {ph->name};
    return e;
}

std::string Expression::render_text() const {
    std::string out;
    render(*root_, false, "", out);
    return out;
}

std::string Expression::render_xpath(const std::string& operand) const {
    std::string out;
    render(*root_, true, operand, out);
    return out;
}

} // namespace medc
