#include "kn/filtstab.hpp"

#include <algorithm>
#include <cstdlib>
#include <functional>

namespace kn {

namespace {

Rational rat(long long n) { return Rational(n, 1); }

struct InvariantViolation : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace

void validate(const BundleData& b) {
  if (b.R < 1) throw InvariantViolation("bundle rank must be positive");
}

void validate(const BundleData& b, const SectionFiltration& f) {
  validate(b);
  if (f.ranks.size() != f.degrees.size() || f.ranks.size() != f.weights.size()) {
    throw InvariantViolation("filtration field lengths disagree");
  }
  long long prev = 0;
  for (size_t k = 0; k < f.ranks.size(); ++k) {
    if (f.ranks[k] <= prev || f.ranks[k] >= b.R) {
      throw InvariantViolation("filtration ranks must be strictly increasing below R");
    }
    prev = f.ranks[k];
    if (f.weights[k] <= Rational(0)) {
      throw InvariantViolation("filtration weights must be positive");
    }
  }
}

void validate(const BundleData& b, const SectionFiltration& f, const Subobject& s) {
  validate(b, f);
  if (s.rank <= 0 || s.rank >= b.R) {
    throw InvariantViolation("subobject rank must be strictly between 0 and R");
  }
  if (s.meets.size() != f.ranks.size()) {
    throw InvariantViolation("subobject meets length disagrees with filtration");
  }
  long long prev = 0;
  for (size_t k = 0; k < s.meets.size(); ++k) {
    long long lo = std::max(0LL, f.ranks[k] + s.rank - b.R);
    long long hi = std::min(f.ranks[k], s.rank);
    if (s.meets[k] < lo || s.meets[k] > hi || s.meets[k] < prev) {
      throw InvariantViolation("subobject meet ranks violate intersection bounds");
    }
    prev = s.meets[k];
  }
}

void validate(const BundleData& b, const ParabolicWeights& pw) {
  validate(b);
  if (pw.flag_ranks.size() != pw.flag_degrees.size() ||
      pw.flag_ranks.size() != pw.m.size()) {
    throw InvariantViolation("parabolic weight field lengths disagree");
  }
  long long prev = 0;
  for (size_t j = 0; j < pw.flag_ranks.size(); ++j) {
    if (pw.flag_ranks[j] <= prev || pw.flag_ranks[j] >= b.R) {
      throw InvariantViolation("flag ranks must be strictly increasing below R");
    }
    prev = pw.flag_ranks[j];
    if (pw.m[j] >= Rational(0)) {
      throw InvariantViolation("parabolic weights m_j must be negative");
    }
  }
}

Rational central_c(const BundleData& b, const SectionFiltration& f) {
  validate(b, f);
  Rational num = rat(b.d);
  for (size_t k = 0; k < f.ranks.size(); ++k) {
    num += f.weights[k] * rat(f.ranks[k]);
  }
  return num / rat(b.R);
}

SlopeVerdict slope_test(const BundleData& b, const SectionFiltration& f,
                        const Subobject& s) {
  validate(b, f, s);
  Rational lhs = rat(s.degree);
  for (size_t k = 0; k < f.ranks.size(); ++k) {
    lhs += f.weights[k] * rat(s.meets[k]);
  }
  lhs /= rat(s.rank);
  Rational rhs = central_c(b, f);
  if (lhs < rhs) return SlopeVerdict::StrictPass;
  if (lhs == rhs) return SlopeVerdict::Equality;
  return SlopeVerdict::Violated;
}

Rational deg_pair(const BundleData& b, const ParabolicWeights& pw) {
  validate(b, pw);
  Rational out = pw.z * rat(b.d);
  for (size_t j = 0; j < pw.m.size(); ++j) {
    out += pw.m[j] *
           (rat(pw.flag_degrees[j]) - rat(pw.flag_ranks[j]) * rat(b.d) / rat(b.R));
  }
  return out;
}

Rational deg_pair_eigenvalue_form(const BundleData& b, const ParabolicWeights& pw) {
  validate(b, pw);
  // Eigenvalue on the piece above the whole flag, then the jumps downward.
  Rational shift(0);
  for (size_t j = 0; j < pw.m.size(); ++j) {
    shift += pw.m[j] * rat(pw.flag_ranks[j]) / rat(b.R);
  }
  const size_t s = pw.m.size();
  // lambda_j = z - shift + sum_{l >= j} m_l, ascending in j since m_l < 0.
  std::vector<Rational> lambda(s + 1);
  Rational tail(0);
  for (size_t j = s; j-- > 0;) {
    tail += pw.m[j];
    lambda[j] = pw.z - shift + tail;
  }
  lambda[s] = pw.z - shift;
  Rational out = lambda[s] * rat(b.d);
  for (size_t j = 0; j < s; ++j) {
    out += (lambda[j] - lambda[j + 1]) * rat(pw.flag_degrees[j]);
  }
  return out;
}

Rational total_degree(const BundleData& b, const SectionFiltration& f,
                      const ParabolicWeights& pw,
                      const std::vector<std::vector<long long>>& meets) {
  validate(b, f);
  validate(b, pw);
  if (meets.size() != f.ranks.size()) {
    throw InvariantViolation("total_degree: meets rows disagree with filtration");
  }
  Rational out = deg_pair(b, pw);
  Rational rank_shift(0);
  for (size_t j = 0; j < pw.m.size(); ++j) {
    rank_shift += pw.m[j] * rat(pw.flag_ranks[j]) / rat(b.R);
  }
  for (size_t k = 0; k < f.ranks.size(); ++k) {
    if (meets[k].size() != pw.m.size()) {
      throw InvariantViolation("total_degree: meets columns disagree with flag");
    }
    Rational term = rat(f.ranks[k]) * (pw.z - rank_shift);
    for (size_t j = 0; j < pw.m.size(); ++j) {
      term += pw.m[j] * rat(meets[k][j]);
    }
    out += f.weights[k] * term;
  }
  out -= pw.z * central_c(b, f) * rat(b.R);
  return out;
}

Rational z_coefficient(const BundleData& b, const SectionFiltration& f, Rational c) {
  validate(b, f);
  Rational out = rat(b.d) - c * rat(b.R);
  for (size_t k = 0; k < f.ranks.size(); ++k) {
    out += f.weights[k] * rat(f.ranks[k]);
  }
  return out;
}

EquivalenceReport equivalence_brute(const BundleData& b, const SectionFiltration& f,
                                    const SearchBounds& bounds) {
  validate(b, f);
  if (b.R > 4 || std::llabs(b.d) > bounds.degree_bound) {
    throw std::invalid_argument("equivalence_brute: bounds exceeded");
  }
  const std::vector<Rational> m_grid = {Rational(-1), Rational(-1, 2), Rational(-2),
                                        Rational(-3)};
  const std::vector<Rational> z_grid = {Rational(-1), Rational(0), Rational(1)};

  EquivalenceReport rep;

  // Enumerate admissible subobjects.
  std::vector<Subobject> subs;
  const size_t steps = f.ranks.size();
  for (long long r1 = 1; r1 < b.R; ++r1) {
    for (long long d1 = -bounds.degree_bound; d1 <= bounds.degree_bound; ++d1) {
      std::vector<long long> meets(steps, 0);
      std::function<void(size_t)> rec = [&](size_t k) {
        if (k == steps) {
          subs.push_back({r1, d1, meets});
          return;
        }
        long long lo = std::max({0LL, f.ranks[k] + r1 - b.R,
                                 k > 0 ? meets[k - 1] : 0LL});
        long long hi = std::min(f.ranks[k], r1);
        for (long long v = lo; v <= hi; ++v) {
          meets[k] = v;
          rec(k + 1);
        }
      };
      rec(0);
    }
  }

  for (const auto& sub : subs) {
    SlopeVerdict verdict = slope_test(b, f, sub);
    if (verdict != SlopeVerdict::StrictPass) rep.all_slopes_strict = false;
    for (const Rational& z : z_grid) {
      for (const Rational& m : m_grid) {
        ParabolicWeights pw{z, {sub.rank}, {sub.degree}, {m}};
        std::vector<std::vector<long long>> meets(steps);
        for (size_t k = 0; k < steps; ++k) meets[k] = {sub.meets[k]};
        Rational total = total_degree(b, f, pw, meets);
        ++rep.instances_checked;
        const bool positive = total > Rational(0);
        if (!positive) rep.all_grid_positive = false;
        // A nonpositive grid value on a strictly passing subobject, or a
        // positive-everywhere grid over a failing one, breaks equivalence.
        if (!positive && verdict == SlopeVerdict::StrictPass) {
          rep.counterexample = {sub, pw, total, verdict};
        }
      }
    }
  }
  rep.equivalent = (rep.all_grid_positive == rep.all_slopes_strict);
  if (!rep.equivalent && !rep.counterexample) {
    // Record the first failing pair for the report.
    for (const auto& sub : subs) {
      if (slope_test(b, f, sub) == SlopeVerdict::StrictPass) continue;
      ParabolicWeights pw{Rational(0), {sub.rank}, {sub.degree}, {Rational(-1)}};
      std::vector<std::vector<long long>> meets(steps);
      for (size_t k = 0; k < steps; ++k) meets[k] = {sub.meets[k]};
      rep.counterexample = {sub, pw, total_degree(b, f, pw, meets),
                            slope_test(b, f, sub)};
      break;
    }
  }
  // Independently of the equivalence verdict, surface a subobject that
  // fails the slope test so callers can inspect the destabilizing data.
  if (!rep.all_slopes_strict) {
    for (const auto& sub : subs) {
      SlopeVerdict v = slope_test(b, f, sub);
      if (v == SlopeVerdict::StrictPass) continue;
      ParabolicWeights pw{Rational(0), {sub.rank}, {sub.degree}, {Rational(-1)}};
      std::vector<std::vector<long long>> meets(steps);
      for (size_t k = 0; k < steps; ++k) meets[k] = {sub.meets[k]};
      rep.destabilizer = {sub, pw, total_degree(b, f, pw, meets), v};
      break;
    }
  }
  return rep;
}

BogomolovReport bogomolov_residual(const BundleData& b, const SectionFiltration& f,
                                   int base_dimension) {
  validate(b, f);
  if (base_dimension != 1) {
    throw std::invalid_argument(
        "bogomolov_residual: only one-dimensional base supported");
  }
  Rational value = rat(b.d) * central_c(b, f);
  for (size_t k = 0; k < f.ranks.size(); ++k) {
    value -= f.weights[k] * rat(f.degrees[k]);
  }
  return {value, value < Rational(0)};
}

std::string to_string(const Rational& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

}  // namespace kn
