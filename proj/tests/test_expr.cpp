#include <cmath>
#include <cstring>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "varexp/expr.hpp"

using varexp::DomainError;
using varexp::ParseError;
using varexp::PreconditionError;
using varexp::expr::Bindings;
using varexp::expr::parse;
using varexp::expr::Variable;

namespace {

std::uint64_t bits(double v) {
  std::uint64_t b;
  std::memcpy(&b, &v, sizeof b);
  return b;
}

}  // namespace

TEST(ExprParse, SineTermVanishesAtOrigin) { EXPECT_EQ(parse("2 + 0.5*sin(3.14159265*x)")(0.0), 2.0); }

TEST(ExprParse, SquareOfThree) { EXPECT_EQ(parse("x^2")(3.0), 9.0); }

TEST(ExprParse, MinSelectsSmallerArgument) { EXPECT_EQ(parse("min(3, 1+x)")(5.0), 3.0); }

TEST(ExprEval, ExpOfZero) { EXPECT_EQ(parse("exp(0)")(0.0), 1.0); }

TEST(ExprEval, SelfDifferenceIsZero) { EXPECT_EQ(parse("x - x")(7.25), 0.0); }

TEST(ExprEval, RationalExpression) { EXPECT_EQ(parse("2 - 1/(1+x^2)")(1.0), 1.5); }

TEST(ExprPrecedence, MultiplicationBindsTighterThanAddition) { EXPECT_EQ(parse("2+3*4")(0.0), 14.0); }

TEST(ExprPrecedence, PowerIsRightAssociative) { EXPECT_EQ(parse("2^3^2")(0.0), 512.0); }

TEST(ExprPrecedence, PowerBindsTighterThanUnaryMinus) {
  EXPECT_EQ(parse("-2^2")(0.0), -4.0);
  EXPECT_EQ(parse("2^-1")(0.0), 0.5);
}

TEST(ExprPrecedence, SubtractionAndDivisionAreLeftAssociative) {
  EXPECT_EQ(parse("10-4-3")(0.0), 3.0);
  EXPECT_EQ(parse("64/4/2")(0.0), 8.0);
}

TEST(ExprEval, TimeAndSpaceVariables) {
  const auto e = parse("t * x + 1");
  EXPECT_EQ(e(2.0, 3.0), 7.0);
  EXPECT_TRUE(e.uses(Variable::kT));
  EXPECT_TRUE(e.uses(Variable::kX));
  EXPECT_FALSE(e.uses(Variable::kXi));
}

TEST(ExprEval, AllFunctionsEvaluate) {
  EXPECT_DOUBLE_EQ(parse("cos(0) + log(exp(2)) + abs(-3) + sqrt(16) + max(1, 2)")(0.0), 1.0 + 2.0 + 3.0 + 4.0 + 2.0);
  EXPECT_NEAR(parse("pi")(0.0), M_PI, 0.0);
}

TEST(ExprErrors, SyntaxErrorReportsPosition) {
  try {
    parse("1 + * 2");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 4u);
  }
}

TEST(ExprErrors, UnknownIdentifierRejected) {
  try {
    parse("2 * y");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("unknown identifier"), std::string::npos);
    EXPECT_EQ(e.position(), 4u);
  }
}

TEST(ExprErrors, MalformedInputs) {
  EXPECT_THROW(parse(""), ParseError);
  EXPECT_THROW(parse("(1 + 2"), ParseError);
  EXPECT_THROW(parse("1 2"), ParseError);
  EXPECT_THROW(parse("min(1)"), ParseError);
  EXPECT_THROW(parse("sin 1"), ParseError);
}

TEST(ExprErrors, UnboundVariable) {
  EXPECT_THROW(parse("t + 1")(0.5), PreconditionError);
  EXPECT_THROW(parse("xi")(0.5), PreconditionError);
}

TEST(ExprErrors, DomainErrors) {
  EXPECT_THROW(parse("log(x)")(0.0), DomainError);
  EXPECT_THROW(parse("sqrt(x)")(-1.0), DomainError);
  EXPECT_THROW(parse("x^0.5")(-4.0), DomainError);
  EXPECT_THROW(parse("1/x")(0.0), DomainError);
  EXPECT_THROW(parse("exp(x)")(1e6), DomainError);
  EXPECT_EQ(parse("x^3")(-2.0), -8.0);  // integer powers of negative bases are fine
}

TEST(ExprProperties, PrintReparseIsEvaluationEquivalent) {
  const char* sources[] = {"2 + 0.5*sin(3*x)", "-x^2^0.5", "1 - (2 - 3) * -x", "min(x, 1) / max(2, x^2 + 1)",
                           "exp(-t) * cos(pi * x) - sqrt(abs(x) + 1)", "x - -x", "((x))"};
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  for (const char* src : sources) {
    const auto e = parse(src);
    const auto again = parse(e.to_string());
    EXPECT_EQ(again.to_string(), e.to_string()) << src;
    for (int k = 0; k < 50; ++k) {
      const double x = u(rng);
      const double t = u(rng);
      EXPECT_EQ(bits(e.eval(Bindings{x, t, std::nullopt})), bits(again.eval(Bindings{x, t, std::nullopt}))) << src;
    }
  }
}

TEST(ExprProperties, RepeatedEvaluationIsBitIdentical) {
  const auto e = parse("sin(x)^2 + cos(x)^2 * exp(x / 3) - log(1 + x)");
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int k = 0; k < 200; ++k) {
    const double x = u(rng);
    const double first = e(x);
    for (int r = 0; r < 3; ++r) EXPECT_EQ(bits(first), bits(e(x)));
  }
}
