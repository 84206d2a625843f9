#pragma once

// Random syntax trees for round-trip property tests.

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "hpshield/ast.hpp"

namespace hpshield::testsupport {

class AstGenerator {
 public:
  explicit AstGenerator(std::uint64_t seed) : rng_(seed) {}

  Term term(int depth) {
    if (depth <= 0 || pick(4) == 0) return leaf_term();
    switch (pick(5)) {
      case 0: return -term(depth - 1);
      case 1: return term(depth - 1) + term(depth - 1);
      case 2: return term(depth - 1) - term(depth - 1);
      case 3: return term(depth - 1) * term(depth - 1);
      default: return power(term(depth - 1), 1 + static_cast<unsigned>(pick(4)));
    }
  }

  Formula formula(int depth) {
    if (depth <= 0 || pick(4) == 0) return leaf_formula(depth);
    switch (pick(8)) {
      case 0: return !formula(depth - 1);
      case 1: return formula(depth - 1) && formula(depth - 1);
      case 2: return formula(depth - 1) || formula(depth - 1);
      case 3: return implies(formula(depth - 1), formula(depth - 1));
      case 4: return quantify(Quantifier::Forall, name(), formula(depth - 1));
      case 5: return quantify(Quantifier::Exists, name(), formula(depth - 1));
      case 6: return box(program(depth - 1), formula(depth - 1));
      default: return leaf_formula(depth);
    }
  }

  Program program(int depth) {
    if (depth <= 0 || pick(4) == 0) return leaf_program(depth);
    switch (pick(4)) {
      case 0: return seq(program(depth - 1), program(depth - 1));
      case 1: return choice(program(depth - 1), program(depth - 1));
      case 2: return loop(program(depth - 1));
      default: return leaf_program(depth);
    }
  }

 private:
  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }

  std::string name() {
    static const std::array<const char*, 9> names = {"x", "v", "a", "t", "eps", "A", "b", "m", "y_2"};
    return names[pick(static_cast<int>(names.size()))];
  }

  double number() {
    switch (pick(6)) {
      case 0: return static_cast<double>(pick(10));
      case 1: return -static_cast<double>(pick(10) + 1);
      case 2: return std::uniform_real_distribution<double>(-100.0, 100.0)(rng_);
      case 3: return 0.1 * pick(100);
      case 4: return std::ldexp(1.0 + pick(1000), pick(160) - 80);
      default: return 1e-7 * pick(50);
    }
  }

  Term leaf_term() { return pick(2) == 0 ? constant(number()) : var(name()); }

  Formula leaf_formula(int depth) {
    if (pick(10) == 0) return truth(pick(2) == 0);
    static constexpr std::array<Relation, 5> rels = {Relation::Le, Relation::Lt, Relation::Eq,
                                                     Relation::Gt, Relation::Ge};
    int d = std::max(0, depth - 1);
    return compare(term(d), rels[pick(5)], term(d));
  }

  Program leaf_program(int depth) {
    int d = std::max(0, depth - 1);
    switch (pick(4)) {
      case 0: return assign(name(), term(d));
      case 1: return assign_any(name());
      case 2: return test(formula(d));
      default: {
        std::vector<std::string> pool = {"x", "v", "t", "y_2"};
        std::shuffle(pool.begin(), pool.end(), rng_);
        std::vector<OdeEquation> eqs;
        int n = 1 + pick(3);
        for (int i = 0; i < n; ++i) eqs.push_back({pool[i], term(d)});
        return pick(3) == 0 ? ode(std::move(eqs)) : ode(std::move(eqs), formula(d));
      }
    }
  }

  std::mt19937_64 rng_;
};

}  // namespace hpshield::testsupport
