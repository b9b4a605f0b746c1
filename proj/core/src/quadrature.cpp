#include "ssnsm/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace ssnsm {
namespace {

// Kronrod abscissae on [-1, 1]; odd indices are the 7 Gauss nodes.
constexpr std::array<double, 8> kXk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double lo;
  double hi;
  double value;
  double error;
};

Panel gk15(const std::function<double(double)>& f, double lo, double hi) {
  const double centre = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  const double fc = f(centre);
  double kronrod = fc * kWk[7];
  double gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXk[j];
    const double s = f(centre - dx) + f(centre + dx);
    kronrod += kWk[j] * s;
    if (j % 2 == 1) gauss += kWg[j / 2] * s;
  }
  kronrod *= half;
  gauss *= half;
  return {lo, hi, kronrod, std::abs(kronrod - gauss)};
}

}  // namespace

QuadratureResult integrate_gk15(const std::function<double(double)>& f, double lo, double hi,
                                double abs_tol, double rel_tol, int max_intervals) {
  QuadratureResult out;
  if (lo == hi) {
    out.converged = true;
    return out;
  }
  const double sign = hi < lo ? -1.0 : 1.0;
  if (hi < lo) std::swap(lo, hi);

  std::vector<Panel> panels{gk15(f, lo, hi)};
  auto worse = [](const Panel& a, const Panel& b) { return a.error < b.error; };

  double total = panels.front().value;
  double err = panels.front().error;
  while (err > std::max(abs_tol, rel_tol * std::abs(total)) &&
         static_cast<int>(panels.size()) < max_intervals) {
    std::pop_heap(panels.begin(), panels.end(), worse);
    const Panel p = panels.back();
    panels.pop_back();
    const double mid = 0.5 * (p.lo + p.hi);
    if (mid <= p.lo || mid >= p.hi) {
      panels.push_back(p);
      std::push_heap(panels.begin(), panels.end(), worse);
      break;
    }
    panels.push_back(gk15(f, p.lo, mid));
    std::push_heap(panels.begin(), panels.end(), worse);
    panels.push_back(gk15(f, mid, p.hi));
    std::push_heap(panels.begin(), panels.end(), worse);

    total = 0.0;
    err = 0.0;
    for (const auto& q : panels) {
      total += q.value;
      err += q.error;
    }
  }
  out.value = sign * total;
  out.error = err;
  out.intervals = static_cast<int>(panels.size());
  out.converged = err <= std::max(abs_tol, rel_tol * std::abs(total));
  return out;
}

QuadratureResult integrate_gk15_upper(const std::function<double(double)>& f, double lo,
                                      double scale, double abs_tol, double rel_tol,
                                      int max_intervals) {
  auto mapped = [&](double x) {
    const double one_minus = 1.0 - x;
    const double u = lo + scale * x / one_minus;
    return f(u) * scale / (one_minus * one_minus);
  };
  return integrate_gk15(mapped, 0.0, 1.0, abs_tol, rel_tol, max_intervals);
}

}  // namespace ssnsm
