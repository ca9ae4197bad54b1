#pragma once

// Compactly supported radial potentials used by the half-line and scattering
// modules, plus the |V|^{1/2} sign-split factorization that feeds the
// integral kernels.

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"

namespace bsdet {

struct RadialPotential {
  std::function<double(double)> value;
  double support = 1.0;  // value(x) == 0 for x > support

  double operator()(double x) const { return x > support ? 0.0 : value(x); }
};

inline RadialPotential square_potential(double strength, double radius) {
  require(radius > 0.0, "square_potential: radius must be positive");
  RadialPotential p;
  p.support = radius;
  p.value = [strength, radius](double x) {
    return (x >= 0.0 && x <= radius) ? strength : 0.0;
  };
  return p;
}

inline RadialPotential gaussian_bump(double amplitude, double center,
                                     double width, double cutoff) {
  require(width > 0.0, "gaussian_bump: width must be positive");
  require(cutoff > 0.0, "gaussian_bump: cutoff must be positive");
  RadialPotential p;
  p.support = cutoff;
  p.value = [=](double x) {
    if (x < 0.0 || x > cutoff) return 0.0;
    double t = (x - center) / width;
    return amplitude * std::exp(-t * t);
  };
  return p;
}

inline RadialPotential truncated_exponential(double amplitude, double rate,
                                             double cutoff) {
  require(cutoff > 0.0, "truncated_exponential: cutoff must be positive");
  RadialPotential p;
  p.support = cutoff;
  p.value = [=](double x) {
    if (x < 0.0 || x > cutoff) return 0.0;
    return amplitude * std::exp(-rate * x);
  };
  return p;
}

// Two whitespace-separated columns (x, V(x)); strictly increasing x; linear
// interpolation between nodes, zero beyond the last node.  Lines starting
// with '#' are comments.
inline RadialPotential tabulated_potential(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("tabulated_potential: cannot open '" + path + "'");
  std::vector<double> xs, vs;
  std::string line;
  while (std::getline(in, line)) {
    auto pos = line.find('#');
    if (pos != std::string::npos) line.erase(pos);
    std::istringstream row(line);
    double x, v;
    if (row >> x >> v) {
      xs.push_back(x);
      vs.push_back(v);
    }
  }
  if (xs.size() < 2)
    throw DomainError("tabulated_potential: need at least two samples");
  for (size_t i = 1; i < xs.size(); ++i)
    if (xs[i] <= xs[i - 1])
      throw DomainError("tabulated_potential: x column must be strictly increasing");

  RadialPotential p;
  p.support = xs.back();
  p.value = [xs = std::move(xs), vs = std::move(vs)](double x) {
    if (x < xs.front() || x > xs.back()) return 0.0;
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    size_t j = std::min(static_cast<size_t>(it - xs.begin()),
                        xs.size() - 1);
    if (j == 0) j = 1;
    double t = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
    return (1.0 - t) * vs[j - 1] + t * vs[j];
  };
  return p;
}

// Sign-split factorization V = u * v with u = sign(V) |V|^{1/2} (the phase
// e^{i arg V} restricted to real V) and v = |V|^{1/2}.  The determinants only
// see the product (the two splits are diagonally similar), but the phase
// lives on the u side by convention.
struct FactoredPotential {
  std::function<double(double)> u;
  std::function<double(double)> v;
  double support = 1.0;
};

inline FactoredPotential factor_split(const RadialPotential& pot) {
  FactoredPotential f;
  f.support = pot.support;
  f.u = [pot](double x) {
    double w = pot(x);
    double r = std::sqrt(std::abs(w));
    return w < 0.0 ? -r : r;
  };
  f.v = [pot](double x) { return std::sqrt(std::abs(pot(x))); };
  return f;
}

// L1 norm of the profile over (0, support), by fine trapezoid sampling;
// finite by construction for the compactly supported potentials here.
inline double potential_l1_norm(const RadialPotential& pot, int samples = 8192) {
  double h = pot.support / samples;
  double acc = 0.5 * (std::abs(pot(0.0)) + std::abs(pot(pot.support)));
  for (int j = 1; j < samples; ++j) acc += std::abs(pot(j * h));
  return acc * h;
}

}  // namespace bsdet
