#include "hrmsbo/objectives.hpp"

#include <cmath>

namespace hrmsbo::bench {

namespace {

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Vec vec1(double a) {
  Vec v(1);
  v << a;
  return v;
}

}  // namespace

SyntheticObjective volatile_ttk() {
  SyntheticObjective o;
  o.name = "volatile-ttk";
  o.bounds = Bounds::unit(2);
  // Tilted plane with a sharp engagement-sweet-spot basin at (0.25, 0.7);
  // values span roughly 15..70 before noise.
  o.mean = [](const Vec& x) {
    const double dx = x[0] - 0.25;
    const double dy = x[1] - 0.7;
    return 40.0 + 30.0 * x[0] - 25.0 * std::exp(-(dx * dx + dy * dy) / 0.05);
  };
  // Noise sd grows toward high x2 / low x1 (2..14): the basin sits where
  // outcomes are volatile, which is exactly what makes SS unrepeatable.
  o.noise_sd = [](const Vec& x) { return 2.0 + 12.0 * x[1] * (1.0 - x[0]); };
  // Argmin of the mean on a 201x201 audit lattice (brute force).
  o.true_min_x = vec2(0.22, 0.7);
  o.true_min_y = 22.045974191042482;
  return o;
}

SyntheticObjective bowl() {
  SyntheticObjective o;
  o.name = "bowl";
  o.bounds = Bounds::unit(2);
  o.mean = [](const Vec& x) {
    const double dx = x[0] - 0.6;
    const double dy = x[1] - 0.4;
    return 5.0 + 40.0 * (dx * dx + dy * dy);
  };
  o.noise_sd = [](const Vec&) { return 1.0; };
  o.true_min_x = vec2(0.6, 0.4);
  o.true_min_y = 5.0;
  return o;
}

SyntheticObjective fig2_1d() {
  SyntheticObjective o;
  o.name = "fig2-1d";
  o.bounds = Bounds::unit(1);
  // One pronounced dip on a gentle upward trend.
  o.mean = [](const Vec& x) {
    const double dx = x[0] - 0.35;
    return 35.0 + 10.0 * x[0] - 12.0 * std::exp(-dx * dx / 0.02);
  };
  // Noise peaks midrange, quiet at the edges.
  o.noise_sd = [](const Vec& x) { return 1.5 + 9.0 * x[0] * (1.0 - x[0]); };
  // Argmin of the mean on a 20001-point audit lattice (brute force).
  o.true_min_x = vec1(0.34165);
  o.true_min_y = 26.458260666255335;
  return o;
}

const SyntheticObjective& find_objective(const std::string& name) {
  static const std::vector<SyntheticObjective> registry = {
      volatile_ttk(), bowl(), fig2_1d()};
  for (const auto& o : registry) {
    if (o.name == name) return o;
  }
  throw std::invalid_argument("unknown objective: " + name);
}

std::vector<std::string> objective_names() {
  return {"volatile-ttk", "bowl", "fig2-1d"};
}

SyntheticHandle::SyntheticHandle(SyntheticObjective objective)
    : objective_(std::move(objective)) {}

double SyntheticHandle::evaluate(const Vec& x, std::uint64_t substream_key) {
  if (!objective_.bounds.contains(x)) {
    throw std::invalid_argument("evaluation point outside objective bounds");
  }
  return objective_.mean(x) + objective_.noise_sd(x) * keyed_normal(substream_key);
}

}  // namespace hrmsbo::bench
