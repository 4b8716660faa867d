#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <string>
#include <type_traits>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "kraichnan/errors.hpp"
#include "kraichnan/params.hpp"

namespace kraichnan::quad {

struct Options {
  double abs_tol = 1e-13;
  double rel_tol = 1e-10;
  // split points; a panel touching one of them is integrated in t = a + (b-a) u^2
  std::vector<double> singular_points;
  // |f(t)| ~ t^{-p} for large t; required (p > 1) when hi is infinite
  double decay_exponent = 0.0;
  int max_panels = 4000;
};

template <class T>
struct Result {
  T value{};
  double error = 0.0;
  long evaluations = 0;
};

namespace detail {

inline double magnitude(double v) { return std::abs(v); }
inline double magnitude(std::complex<double> v) { return std::abs(v); }
inline bool finite(double v) { return std::isfinite(v); }
inline bool finite(std::complex<double> v) {
  return std::isfinite(v.real()) && std::isfinite(v.imag());
}
inline double re(double v) { return v; }
inline double re(std::complex<double> v) { return v.real(); }
inline double im(double) { return 0.0; }
inline double im(std::complex<double> v) { return v.imag(); }

enum class MapKind { Linear, SqrtLeft, SqrtRight, Tail };

struct Map {
  MapKind kind;
  double a, b;  // physical segment; for Tail, start and length scale
  double t(double u) const {
    switch (kind) {
      case MapKind::Linear: return u;
      case MapKind::SqrtLeft: return a + (b - a) * u * u;
      case MapKind::SqrtRight: return b - (b - a) * u * u;
      case MapKind::Tail: return a + b * u / (1.0 - u);
    }
    return u;
  }
  double jac(double u) const {
    switch (kind) {
      case MapKind::Linear: return 1.0;
      case MapKind::SqrtLeft:
      case MapKind::SqrtRight: return 2.0 * (b - a) * u;
      case MapKind::Tail: return b / ((1.0 - u) * (1.0 - u));
    }
    return 1.0;
  }
};

template <class T>
struct Panel {
  int map;
  double lo, hi;
  T value;
  double error;
  bool splittable;
};

struct Rule {
  std::vector<double> x, wk, wg;  // x[0] = 0; wg aligned with odd x indices
  static const Rule& get() {
    static const Rule r = [] {
      Rule q;
      using GK = boost::math::quadrature::gauss_kronrod<double, 21>;
      using G = boost::math::quadrature::gauss<double, 10>;
      for (double v : GK::abscissa()) q.x.push_back(v);
      for (double v : GK::weights()) q.wk.push_back(v);
      for (double v : G::weights()) q.wg.push_back(v);
      return q;
    }();
    return r;
  }
};

// one GK21 panel with the QUADPACK error heuristic
template <class T, class G>
Panel<T> eval_panel(G& g, int map, double lo, double hi, long& evals) {
  const Rule& r = Rule::get();
  const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
  const T f0 = g(c);
  T kron = f0 * r.wk[0];
  T gauss{};
  double absk = magnitude(f0) * r.wk[0];
  T fv[21];
  fv[0] = f0;
  for (std::size_t i = 1; i < r.x.size(); ++i) {
    const T f1 = g(c - h * r.x[i]);
    const T f2 = g(c + h * r.x[i]);
    fv[2 * i - 1] = f1;
    fv[2 * i] = f2;
    kron += (f1 + f2) * r.wk[i];
    absk += (magnitude(f1) + magnitude(f2)) * r.wk[i];
    if (i % 2 == 1) gauss += (f1 + f2) * r.wg[i / 2];
  }
  evals += 21;
  const T mean = kron * 0.5;
  double asc = r.wk[0] * magnitude(f0 - mean);
  for (std::size_t i = 1; i < r.x.size(); ++i)
    asc += r.wk[i] * (magnitude(fv[2 * i - 1] - mean) + magnitude(fv[2 * i] - mean));
  asc *= std::abs(h);
  absk *= std::abs(h);
  double err = magnitude((kron - gauss) * h);
  if (asc != 0.0 && err != 0.0) err = asc * std::min(1.0, std::pow(200.0 * err / asc, 1.5));
  constexpr double eps = std::numeric_limits<double>::epsilon();
  if (absk > std::numeric_limits<double>::min() / (50 * eps))
    err = std::max(50 * eps * absk, err);
  const double scale = std::max(std::abs(lo), std::abs(hi));
  const bool splittable = (hi - lo) > 64 * eps * std::max(scale, 1e-300) && c > lo && c < hi;
  return {map, lo, hi, kron * h, err, splittable};
}

}  // namespace detail

// Global adaptive Gauss-Kronrod (10/21) with bisection of the worst panel.
template <class F>
auto integrate(F&& f, double lo, double hi, const Options& opt = {})
    -> Result<std::decay_t<std::invoke_result_t<F&, double>>> {
  using T = std::decay_t<std::invoke_result_t<F&, double>>;
  using namespace detail;
  if (!(lo < hi)) throw DomainError("integrate: need lo < hi");
  if (!(opt.abs_tol > 0.0) || !(opt.rel_tol > 0.0))
    throw DomainError("integrate: tolerances must be positive");
  const bool infinite = std::isinf(hi);
  if (std::isinf(lo)) throw DomainError("integrate: lower limit must be finite");
  if (infinite && !(opt.decay_exponent > 1.0))
    throw DomainError("integrate: infinite range needs a decay exponent > 1");

  long evals = 0;
  std::vector<Map> maps;
  std::vector<double> pts{lo};
  for (double p : opt.singular_points)
    if (p > lo && (infinite || p < hi)) pts.push_back(p);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  const double last = pts.back();
  if (!infinite) pts.push_back(hi);

  auto is_sing = [&](double x) {
    for (double p : opt.singular_points)
      if (p == x) return true;
    return false;
  };

  auto eval_f = [&](const Map& m, double u) -> T {
    const double t = m.t(u);
    const T v = f(t);
    if (!finite(v))
      throw NonFiniteIntegrand("integrate: non-finite integrand at t = " + std::to_string(t));
    return v * m.jac(u);
  };

  std::vector<Panel<T>> panels;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double a = pts[i], b = pts[i + 1];
    const bool sa = is_sing(a), sb = is_sing(b);
    if (sa && sb) {
      const double mid = 0.5 * (a + b);
      maps.push_back({MapKind::SqrtLeft, a, mid});
      maps.push_back({MapKind::SqrtRight, mid, b});
    } else if (sa) {
      maps.push_back({MapKind::SqrtLeft, a, b});
    } else if (sb) {
      maps.push_back({MapKind::SqrtRight, a, b});
    } else {
      maps.push_back({MapKind::Linear, a, b});
    }
  }
  for (std::size_t k = 0; k < maps.size(); ++k) {
    const Map& m = maps[k];
    auto g = [&](double u) { return eval_f(m, u); };
    if (m.kind == MapKind::Linear)
      panels.push_back(eval_panel<T>(g, int(k), m.a, m.b, evals));
    else
      panels.push_back(eval_panel<T>(g, int(k), 0.0, 1.0, evals));
  }

  // the neglected tail is bounded by |f(T)| T/(p-1); the same expression, signed, is
  // added as a power-law correction
  double tail_bound = 0.0;
  T tail_estimate{};
  if (infinite) {
    // pick the truncation point from the declared algebraic decay
    const int k = int(maps.size());
    const double L = std::max(1.0, std::abs(last));
    maps.push_back({MapKind::Tail, last, L});
    const double p_exp = opt.decay_exponent;
    double span = L;
    T rough{};
    for (const auto& p : panels) rough += p.value;
    {
      const Map& m = maps[k];
      auto g = [&](double u) { return eval_f(m, u); };
      rough += eval_panel<T>(g, k, 0.0, 0.5, evals).value;
    }
    double bound = 0.0;
    T fT_last{};
    for (int it = 0; it < 200; ++it) {
      const double T_end = last + span;
      const T fT = f(T_end);
      fT_last = fT;
      ++evals;
      if (!finite(fT)) throw NonFiniteIntegrand("integrate: non-finite integrand in tail");
      bound = magnitude(fT) * T_end / (p_exp - 1.0);
      const double target = 0.1 * std::max(opt.abs_tol, opt.rel_tol * magnitude(rough));
      if (bound < target || span > 1e15 * L) break;
      span *= 2.0;
    }
    tail_bound = bound;
    tail_estimate = fT_last * ((last + span) / (p_exp - 1.0));
    const double u_end = (span / L) / (1.0 + span / L);
    const Map& m = maps[k];
    auto g = [&](double u) { return eval_f(m, u); };
    panels.push_back(eval_panel<T>(g, k, 0.0, u_end, evals));
  }

  auto cmp = [](const Panel<T>& x, const Panel<T>& y) { return x.error < y.error; };
  std::vector<Panel<T>> heap, frozen;
  for (auto& p : panels) (p.splittable ? heap : frozen).push_back(p);
  std::make_heap(heap.begin(), heap.end(), cmp);

  auto totals = [&](T& v, double& e) {
    v = tail_estimate;
    e = tail_bound;
    for (const auto& p : heap) v += p.value, e += p.error;
    for (const auto& p : frozen) v += p.value, e += p.error;
  };

  T value{};
  double error = 0.0;
  totals(value, error);
  int count = int(heap.size() + frozen.size());
  while (!heap.empty()) {
    if (error <= std::max(opt.abs_tol, opt.rel_tol * magnitude(value))) break;
    if (count >= opt.max_panels) break;
    std::pop_heap(heap.begin(), heap.end(), cmp);
    Panel<T> worst = heap.back();
    heap.pop_back();
    const Map& m = maps[worst.map];
    auto g = [&](double u) { return eval_f(m, u); };
    const double mid = 0.5 * (worst.lo + worst.hi);
    Panel<T> left = eval_panel<T>(g, worst.map, worst.lo, mid, evals);
    Panel<T> right = eval_panel<T>(g, worst.map, mid, worst.hi, evals);
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    for (auto* p : {&left, &right}) {
      if (p->splittable) {
        heap.push_back(*p);
        std::push_heap(heap.begin(), heap.end(), cmp);
      } else {
        frozen.push_back(*p);
      }
    }
    ++count;
    if (count % 64 == 0) totals(value, error);  // limit drift of the running sums
  }
  totals(value, error);
  if (error > std::max(opt.abs_tol, opt.rel_tol * magnitude(value)))
    throw ToleranceNotReached("integrate: tolerance not reached (error " +
                                  std::to_string(error) + ")",
                              re(value), im(value), error);
  return {value, error, evals};
}

// int_a^inf g(t) cos(omega t) dt (or sin) for slowly decaying smooth g
double fourier_tail(const std::function<double(double)>& g, double a, double omega,
                    bool use_sin, double rel_tol = 1e-12);

// f(r) = r^{d-1} int_0^pi sin^d(theta) (1 - 2 r cos(theta) + r^2)^{-s} dtheta
double f_inner(double r, const ModelParams& p, double rel_tol = 1e-12);

// int_0^pi sin^d(theta) [(1 - 2 r cos(theta) + r^2)^{-s} - 1] dtheta, cancellation-free at small r
double f_inner_excess(double r, const ModelParams& p, double rel_tol = 1e-12);

// J(lambda) = int_0^inf h(lambda r) f(r) dr with h(t) = (1 + t^2)^{-d/2-alpha}
Result<double> J_direct(double lambda, const ModelParams& p, double rel_tol = 1e-10);

// J(lambda) minus its leading lambda^{-d} term, integrated without cancellation
Result<double> J_subtracted(double lambda, const ModelParams& p, double rel_tol = 1e-10);

}  // namespace kraichnan::quad
