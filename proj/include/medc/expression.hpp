#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace medc {

// reduced fraction, den > 0
struct Rational {
    __int128 num = 0;
    __int128 den = 1;

    static Rational from_decimal(const std::string& text); // "1.8" / "1,8" / "-32"
    void reduce();
    bool operator==(const Rational& o) const { return num == o.num && den == o.den; }
};

// arithmetic over decimal literals and {#Name} placeholders:
//   + - (also U+2212), * (also U+00D7), /, unary minus, parentheses
class Expression {
public:
    static Expression parse(const std::string& text);

    // distinct placeholder names in order of first appearance
    const std::vector<std::string>& placeholders() const;

    // substitutes `value` for every placeholder; exact rational arithmetic,
    // long-double fallback on overflow; rounds half-up (away from zero) to
    // round_digits fractional digits, trailing zeros trimmed
    std::string evaluate(const std::string& value, int round_digits = 6) const;
    long double evaluate_ld(long double value) const;

    // a*x + b when the expression is affine in its placeholder
    std::optional<std::pair<Rational, Rational>> linear_form() const;

    // (x - b) / a for a linear expression with a != 0
    Expression invert_linear() const;

    // minimal-parenthesis rendering; literals with '.' decimal point
    std::string render_text() const;
    // same arithmetic as an XPath 1.0 expression over `operand`
    std::string render_xpath(const std::string& operand) const;

    struct Node;

private:
    std::shared_ptr<const Node> root_;
    std::vector<std::string> names_;
};

std::string format_decimal(const Rational& r, int round_digits = 6);

} // namespace medc
