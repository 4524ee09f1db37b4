#include "qhrisk/specs.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "qhrisk/errors.hpp"

namespace qhrisk {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double number(const std::string& tok, std::string_view whole) {
  if (tok.empty()) throw SpecError("missing number in '" + std::string(whole) + "'", tok);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(tok.c_str(), &end);
  if (end != tok.c_str() + tok.size() || errno == ERANGE || !std::isfinite(v)) {
    throw SpecError("not a number '" + tok + "' in '" + std::string(whole) + "'", tok);
  }
  return v;
}

struct Head {
  std::string kind;
  std::string rest;
};

Head head(std::string_view spec) {
  const auto pos = spec.find(':');
  if (pos == std::string_view::npos) return {trim(spec), ""};
  return {trim(spec.substr(0, pos)), std::string(spec.substr(pos + 1))};
}

std::vector<double> numbers(const std::string& rest, std::string_view whole,
                            std::size_t min_count, std::size_t max_count) {
  std::vector<double> out;
  if (!trim(rest).empty()) {
    for (const auto& t : split(rest, ',')) out.push_back(number(t, whole));
  }
  if (out.size() < min_count || out.size() > max_count) {
    const std::string want = min_count == max_count
                                 ? std::to_string(min_count)
                                 : std::to_string(min_count) + "-" + std::to_string(max_count);
    throw SpecError("'" + std::string(whole) + "' takes " + want + " parameter(s)",
                    std::string(whole));
  }
  return out;
}

// Re-throws domain errors from the constructors as spec errors.
template <class F>
auto build(std::string_view whole, F&& f) {
  try {
    return f();
  } catch (const DomainError& e) {
    throw SpecError(std::string(e.what()) + " (in '" + std::string(whole) + "')",
                    std::string(whole));
  }
}

std::vector<std::pair<double, double>> pairs(const std::string& rest, char sep,
                                             std::string_view whole) {
  std::vector<std::pair<double, double>> out;
  for (const auto& item : split(rest, ',')) {
    const auto parts = split(item, sep);
    if (parts.size() != 2) {
      throw SpecError("expected X" + std::string(1, sep) + "Y, got '" + item + "'", item);
    }
    out.emplace_back(number(parts[0], whole), number(parts[1], whole));
  }
  return out;
}

}  // namespace

Distortion parse_distortion(std::string_view spec) {
  const auto [kind, rest] = head(spec);
  if (kind == "avatr") {
    const auto p = numbers(rest, spec, 1, 1);
    return build(spec, [&] { return Distortion::avatr(p[0]); });
  }
  if (kind == "identity" || kind == "mean") {
    numbers(rest, spec, 0, 0);
    return Distortion::identity();
  }
  if (kind == "ph") {
    const auto p = numbers(rest, spec, 1, 1);
    return build(spec, [&] { return Distortion::proportional_hazard(p[0]); });
  }
  if (kind == "osm") {
    const auto p = numbers(rest, spec, 2, 2);
    return build(spec, [&] { return Distortion::one_sided_moment(p[0], p[1]); });
  }
  if (kind == "expectile") {
    const auto p = numbers(rest, spec, 1, 1);
    return build(spec, [&] { return Distortion::expectile(p[0]); });
  }
  if (kind == "tab") {
    std::vector<double> t, g;
    for (const auto& [a, b] : pairs(rest, '/', spec)) {
      t.push_back(a);
      g.push_back(b);
    }
    return build(spec, [&] { return Distortion::tabulated(t, g); });
  }
  throw SpecError("unknown distortion '" + kind + "'", kind);
}

RiskEvaluator parse_risk(std::string_view spec) {
  const auto [kind, rest] = head(spec);
  if (kind == "sup") {
    std::vector<Distortion> family;
    for (const auto& m : split(rest, ';')) family.push_back(parse_distortion(m));
    return build(spec, [&] { return RiskEvaluator::kusuoka_sup(family); });
  }
  if (kind == "one_sided_moment") {
    const auto p = numbers(rest, spec, 2, 2);
    return build(spec, [&] { return RiskEvaluator::one_sided_moment(p[0], p[1]); });
  }
  if (kind == "expectile_measure") {
    const auto p = numbers(rest, spec, 1, 1);
    return build(spec, [&] { return RiskEvaluator::expectile(p[0]); });
  }
  if (kind == "hg") {
    const auto p = numbers(rest, spec, 2, 2);
    return build(spec, [&] {
      return RiskEvaluator::haezendonck(YoungFn::power(p[1]), p[0]);
    });
  }
  try {
    return RiskEvaluator::distortion(parse_distortion(spec));
  } catch (const SpecError& e) {
    if (e.token() == kind) throw SpecError("unknown risk '" + kind + "'", kind);
    throw;
  }
}

Dist parse_dist(std::string_view spec) {
  const auto [kind, rest] = head(spec);
  if (kind == "reflect") return reflect(parse_dist(rest));
  if (kind == "uniform") {
    const auto p = numbers(rest, spec, 2, 2);
    return build(spec, [&] { return make_uniform(p[0], p[1]); });
  }
  if (kind == "exponential" || kind == "exp") {
    const auto p = numbers(rest, spec, 1, 1);
    return build(spec, [&] { return make_exponential(p[0]); });
  }
  if (kind == "pareto") {
    const auto p = numbers(rest, spec, 1, 2);
    return build(spec, [&] { return make_pareto(p[0], p.size() > 1 ? p[1] : 1.0); });
  }
  if (kind == "normal") {
    const auto p = numbers(rest, spec, 2, 2);
    return build(spec, [&] { return make_normal(p[0], p[1]); });
  }
  if (kind == "point") {
    const auto p = numbers(rest, spec, 1, 1);
    return build(spec, [&] { return make_point_mass(p[0]); });
  }
  if (kind == "discrete") {
    std::vector<Atom> atoms;
    for (const auto& [x, p] : pairs(rest, '@', spec)) atoms.push_back({x, p});
    return build(spec, [&] { return make_discrete(atoms); });
  }
  if (kind == "pwl") {
    std::vector<double> x, F;
    for (const auto& [a, b] : pairs(rest, '/', spec)) {
      x.push_back(a);
      F.push_back(b);
    }
    return build(spec, [&] { return make_piecewise_linear(x, F); });
  }
  throw SpecError("unknown distribution '" + kind + "'", kind);
}

WeightFn parse_weight(std::string_view spec) {
  const auto [kind, rest] = head(spec);
  if (kind == "one" || kind == "1") {
    numbers(rest, spec, 0, 0);
    return WeightFn::one();
  }
  if (kind == "phi") {
    const auto p = numbers(rest, spec, 1, 1);
    return build(spec, [&] { return WeightFn::power(p[0]); });
  }
  throw SpecError("unknown weight '" + kind + "'", kind);
}

Direction parse_direction(std::string_view spec, const Dist& F0) {
  const auto [kind, rest] = head(spec);
  if (kind == "bump") {
    const auto p = numbers(rest, spec, 3, 3);
    return build(spec, [&] { return Direction::bump(p[0], p[1], p[2]); });
  }
  if (kind == "const") {
    const auto p = numbers(rest, spec, 3, 3);
    return build(spec, [&] { return Direction::constant(p[0], p[1], p[2]); });
  }
  if (kind == "diff") {
    const Dist G = parse_dist(rest);
    return build(spec, [&] { return Direction::difference(G, F0); });
  }
  throw SpecError("unknown direction '" + kind + "'", kind);
}

}  // namespace qhrisk
