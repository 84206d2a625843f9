#include <gtest/gtest.h>

#include <cstdlib>

#include "hpshield/config.hpp"
#include "hpshield/model_file.hpp"
#include "hpshield/models.hpp"
#include "hpshield/parser.hpp"
#include "hpshield/printer.hpp"

using namespace hpshield;

TEST(ModelFile, Sections) {
  std::string text =
      "// stop sign\n"
      "init: v^2 <= 2*b*(m-x) // braking distance\n"
      "  & v >= 0\n"
      "program:\n"
      "  {{a := -b; ++ ?v < 1; a := A;}; t := 0; {x'=v, v'=a, t'=1 & v>=0 & t<=eps}}*\n"
      "safe: x <= m\n";
  SafetyModel m = parse_model(text);
  EXPECT_EQ(print_formula(m.init), "v^2 <= 2 * b * (m - x) & v >= 0");
  EXPECT_EQ(print_formula(m.safe), "x <= m");
  EXPECT_NE(as<LoopProgram>(m.program), nullptr);
  EXPECT_EQ(parse_model(print_model(m)).program, m.program);
  EXPECT_NE(print_formula(m.as_formula()).find("->"), std::string::npos);
}

TEST(ModelFile, ErrorsPointIntoTheFile) {
  std::string text = "init: x >= 0\nprogram: x := x +\nsafe: x >= 0\n";
  try {
    parse_model(text);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_GE(e.span().start, text.find("program:"));
    EXPECT_LE(e.span().end, text.find("safe:"));
  }
  EXPECT_THROW(parse_model("init: true\nsafe: true\n"), ParseError);
  EXPECT_THROW(parse_model("init: true\ninit: true\nprogram: ?true\nsafe: true\n"), ParseError);
  EXPECT_THROW(parse_model("hello\ninit: true\nprogram: ?true\nsafe: true\n"), ParseError);
}

TEST(ModelFile, AssignmentIsNotALabel) {
  SafetyModel m = parse_model("init: true\nprogram:\nsafe := 1;\nsafe: safe > 0\n");
  EXPECT_EQ(print_program(m.program), "safe := 1");
}

TEST(Config, SectionsAndConversions) {
  Config c{{"seed", "1"}, {"env.eps", "0.5"}};
  c.merge_text("# comment\nseed = 7\n[env]\neps = 0.1  # latency\nname = car\nflag = yes\n");
  EXPECT_EQ(c.integer("seed"), 7);
  EXPECT_DOUBLE_EQ(c.number("env.eps"), 0.1);
  EXPECT_EQ(c.string("env.name"), "car");
  EXPECT_TRUE(c.boolean("env.flag"));
  EXPECT_EQ(c.number("env.missing", 3.0), 3.0);
  EXPECT_THROW(c.number("env.name"), ConfigError);
  EXPECT_THROW(c.integer("env.eps"), ConfigError);
  EXPECT_THROW(c.string("nope"), ConfigError);
  EXPECT_EQ(c.with_prefix("env.").size(), 3U);
}

TEST(Config, Errors) {
  Config c;
  EXPECT_THROW(c.merge_text("[env\n"), ConfigError);
  EXPECT_THROW(c.merge_text("novalue\n"), ConfigError);
  EXPECT_THROW(c.merge_text("bad key = 1\n"), ConfigError);
  try {
    c.merge_text("a = 1\n\nbroken\n", "f.cfg");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("f.cfg:3"), std::string::npos);
  }
}

TEST(Config, EnvironmentOverridesKnownKeys) {
  Config c{{"env.b_actual", "1"}};
  setenv("HPSHIELD_ENV_B_ACTUAL", "0.5", 1);
  setenv("HPSHIELD_UNKNOWN", "2", 1);
  c.merge_environment();
  unsetenv("HPSHIELD_ENV_B_ACTUAL");
  unsetenv("HPSHIELD_UNKNOWN");
  EXPECT_DOUBLE_EQ(c.number("env.b_actual"), 0.5);
  EXPECT_FALSE(c.has("unknown"));
}
