#include "mrseq/seq.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace mrseq::seq {

namespace {

constexpr std::size_t kMaxPlotSamples = 4'000'000;

} // namespace

PlotSeries diagram_series(EventTimeline const &tl, double dt_plot)
{
  PlotSeries out;
  if (tl.events.empty()) { return out; }
  if (!(dt_plot > 0.0)) { throw Error("plot step must be positive"); }
  double const total = tl.total_duration;
  if (total / dt_plot > static_cast<double>(kMaxPlotSamples)) {
    throw Error(fmt::format("plot step {} s gives more than {} samples", dt_plot, kMaxPlotSamples));
  }

  // Uniform grid plus every event boundary; boundaries win over grid points
  // that land within `tol` of them so boundary values stay exact.
  struct Point
  {
    double t;
    bool   boundary;
  };
  std::vector<Point> pts;
  std::size_t const  n_grid = static_cast<std::size_t>(std::floor(total / dt_plot));
  for (std::size_t k = 0; k <= n_grid; ++k) { pts.push_back({k * dt_plot, false}); }
  for (auto const &e : tl.events) { pts.push_back({e.t_start, true}); }
  pts.push_back({total, true});
  std::stable_sort(pts.begin(), pts.end(), [](Point const &a, Point const &b) { return a.t < b.t; });

  double const tol = 1e-12 + 1e-9 * dt_plot;
  std::vector<double> times;
  std::vector<bool>   exact;
  for (auto const &p : pts) {
    if (!times.empty() && p.t - times.back() < tol) {
      if (p.boundary && !exact.back()) {
        times.back() = p.t;
        exact.back() = true;
      }
      continue;
    }
    times.push_back(p.t);
    exact.push_back(p.boundary);
  }

  std::size_t ev = 0;
  for (double t : times) {
    while (ev < tl.events.size() && tl.events[ev].t_end <= t) { ++ev; }
    double rf_mag = 0.0, rf_phase = 0.0, adc = 0.0;
    std::array<double, 3> g{};
    if (ev < tl.events.size() && tl.events[ev].t_start <= t) {
      Event const &e = tl.events[ev];
      g = e.grad_at(t);
      if (e.rf) {
        auto const b1 = e.rf->b1(t - e.t_start);
        rf_mag = std::abs(b1);
        rf_phase = rf_mag > 0.0 ? std::arg(b1) : 0.0;
      }
      adc = e.adc ? 1.0 : 0.0;
    }
    out.t.push_back(t);
    out.rf_mag.push_back(rf_mag);
    out.rf_phase.push_back(rf_phase);
    out.gx.push_back(g[0]);
    out.gy.push_back(g[1]);
    out.gz.push_back(g[2]);
    out.adc_mask.push_back(adc);
  }
  return out;
}

} // namespace mrseq::seq
