#include "mrseq/constants.hpp"
#include "mrseq/phantom.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace mrseq::phantom {

namespace {

MotionPath const *motion_of(Spin const &s, std::vector<MotionPath> const &motion)
{
  if (s.motion_id < 0 || static_cast<std::size_t>(s.motion_id) >= motion.size()) { return nullptr; }
  return &motion[static_cast<std::size_t>(s.motion_id)];
}

} // namespace

void check(Phantom const &p)
{
  for (std::size_t i = 0; i < p.motion.size(); ++i) {
    auto const &m = p.motion[i];
    for (int a = 0; a < 3; ++a) {
      if (!std::isfinite(m.v[a])) { throw SchemaError(fmt::format(".motion[{}].v", i), "velocity must be finite"); }
      if (m.v[a] != 0.0 && !(m.region.hi[a] > m.region.lo[a])) {
        throw SchemaError(fmt::format(".motion[{}].region", i), "region needs positive extent along every moving axis");
      }
    }
  }
  for (std::size_t i = 0; i < p.spins.size(); ++i) {
    auto const &s = p.spins[i];
    if (s.motion_id < -1 || s.motion_id >= static_cast<std::int64_t>(p.motion.size())) {
      throw SchemaError(fmt::format(".spins[{}].motion_id", i), fmt::format("no motion path {}", s.motion_id));
    }
    if (!(s.t2 > 0.0F) || !(s.t1 >= s.t2)) {
      throw SchemaError(fmt::format(".spins[{}]", i), fmt::format("need t1 >= t2 > 0, got t1={} t2={}", s.t1, s.t2));
    }
    if (!(s.pd >= 0.0F) || !std::isfinite(s.pd)) { throw SchemaError(fmt::format(".spins[{}].pd", i), "pd must be finite and >= 0"); }
    if (!std::isfinite(s.delta_omega)) { throw SchemaError(fmt::format(".spins[{}].delta_omega", i), "must be finite"); }
  }
  if (p.grid) {
    auto const &g = *p.grid;
    for (int a = 0; a < 3; ++a) {
      if (g.dims[a] <= 0) { throw SchemaError(".grid.dims", "dimensions must be positive"); }
      if (!(g.spacing[a] > 0.0)) { throw SchemaError(".grid.spacing", "spacing must be positive"); }
    }
    if (g.pd.size() != g.voxels() || g.t1.size() != g.voxels() || g.t2.size() != g.voxels()) {
      throw SchemaError(".grid", "volume sizes do not match dims");
    }
  }
}

Vec3 position_at(Spin const &spin, std::vector<MotionPath> const &motion, double t)
{
  Vec3 r{spin.r0[0], spin.r0[1], spin.r0[2]};
  MotionPath const *m = motion_of(spin, motion);
  if (!m) { return r; }
  for (int a = 0; a < 3; ++a) {
    if (m->v[a] == 0.0) { continue; }
    double const len = m->region.hi[a] - m->region.lo[a];
    double const u = r[a] - m->region.lo[a] + m->v[a] * t;
    r[a] = r[a] + m->v[a] * t - len * std::floor(u / len);
  }
  return r;
}

std::vector<double> wrap_events(Spin const &spin, std::vector<MotionPath> const &motion, double t0, double t1)
{
  std::vector<double> out;
  MotionPath const *m = motion_of(spin, motion);
  if (!m || !(t1 > t0)) { return out; }
  for (int a = 0; a < 3; ++a) {
    double const v = m->v[a];
    if (v == 0.0) { continue; }
    double const len = m->region.hi[a] - m->region.lo[a];
    double const u0 = spin.r0[a] - m->region.lo[a];
    double const ua = (u0 + v * t0) / len;
    double const ub = (u0 + v * t1) / len;
    // Crossings of u = k·len inside (t0, t1].
    long const k_lo = v > 0 ? static_cast<long>(std::floor(ua)) + 1 : static_cast<long>(std::ceil(ub));
    long const k_hi = v > 0 ? static_cast<long>(std::floor(ub)) : static_cast<long>(std::ceil(ua)) - 1;
    for (long k = k_lo; k <= k_hi; ++k) {
      double const t = (static_cast<double>(k) * len - u0) / v;
      if (t > t0 && t <= t1) { out.push_back(t); }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<SlicePlane> slice_from_sequence(seq::EventTimeline const &tl)
{
  for (auto const &e : tl.events) {
    if (!e.rf || e.g0 != e.g1) { continue; }
    int axis = -1, nonzero = 0;
    for (int a = 0; a < 3; ++a) {
      if (e.g0[a] != 0.0) {
        axis = a;
        ++nonzero;
      }
    }
    if (nonzero != 1) { continue; }
    double const g = e.g0[axis];
    SlicePlane plane;
    plane.axis = static_cast<seq::Axis>(axis);
    plane.center_offset = e.rf->freq_offset / (kGammaBar * g);
    plane.thickness = e.rf->bandwidth() / (kGammaBar * std::abs(g));
    return plane;
  }
  return std::nullopt;
}

std::optional<Plane> parse_plane(std::string_view s)
{
  if (s == "axial") { return Plane::axial; }
  if (s == "coronal") { return Plane::coronal; }
  if (s == "sagittal") { return Plane::sagittal; }
  return std::nullopt;
}

char const *to_string(Plane p)
{
  switch (p) {
  case Plane::axial: return "axial";
  case Plane::coronal: return "coronal";
  case Plane::sagittal: return "sagittal";
  }
  return "axial";
}

SliceImage orthogonal_slices(Phantom const &p, Plane plane, int index, Quantity q)
{
  if (!p.grid) { throw NoGrid(p.name); }
  Grid const &g = *p.grid;
  // fixed axis, column axis, row axis
  std::array<int, 3> ax{};
  switch (plane) {
  case Plane::axial: ax = {2, 0, 1}; break;
  case Plane::coronal: ax = {1, 0, 2}; break;
  case Plane::sagittal: ax = {0, 1, 2}; break;
  }
  if (index < 0 || index >= g.dims[ax[0]]) {
    throw RangeError(fmt::format("{} index {} outside [0, {})", to_string(plane), index, g.dims[ax[0]]));
  }
  std::vector<float> const &vol = q == Quantity::pd ? g.pd : q == Quantity::t1 ? g.t1 : g.t2;

  SliceImage img;
  img.cols = g.dims[ax[1]];
  img.rows = g.dims[ax[2]];
  img.u_axis = "xyz"[ax[1]];
  img.v_axis = "xyz"[ax[2]];
  img.u_min = g.origin[ax[1]] - 0.5 * g.spacing[ax[1]];
  img.u_max = img.u_min + g.dims[ax[1]] * g.spacing[ax[1]];
  img.v_min = g.origin[ax[2]] - 0.5 * g.spacing[ax[2]];
  img.v_max = img.v_min + g.dims[ax[2]] * g.spacing[ax[2]];
  img.values.resize(std::size_t(img.rows) * img.cols);
  for (int r = 0; r < img.rows; ++r) {
    for (int c = 0; c < img.cols; ++c) {
      std::array<int, 3> ijk{};
      ijk[ax[0]] = index;
      ijk[ax[1]] = c;
      ijk[ax[2]] = r;
      std::size_t const v = std::size_t(ijk[0]) + std::size_t(g.dims[0]) * (ijk[1] + std::size_t(g.dims[1]) * ijk[2]);
      img.values[std::size_t(r) * img.cols + c] = vol[v];
    }
  }
  return img;
}

namespace {

Spin make_spin(double x, double y, double z, Tissue const &t, int motion_id = -1)
{
  Spin s;
  s.r0 = {static_cast<float>(x), static_cast<float>(y), static_cast<float>(z)};
  s.t1 = t.t1;
  s.t2 = t.t2;
  s.pd = t.pd;
  s.motion_id = motion_id;
  return s;
}

Grid make_grid(std::array<int, 3> dims, double spacing)
{
  Grid g;
  g.dims = dims;
  g.spacing = {spacing, spacing, spacing};
  for (int a = 0; a < 3; ++a) { g.origin[a] = -0.5 * (dims[a] - 1) * spacing; }
  g.pd.assign(g.voxels(), 0.0F);
  g.t1.assign(g.voxels(), 0.0F);
  g.t2.assign(g.voxels(), 0.0F);
  return g;
}

void paint(Grid &g, std::size_t v, Tissue const &t)
{
  g.pd[v] = t.pd;
  g.t1[v] = t.t1;
  g.t2[v] = t.t2;
}

// Lattice index range covering [-r, r] at pitch `s`.
int half_count(double r, double s) { return static_cast<int>(std::floor(r / s + 1e-9)); }

} // namespace

Phantom make_disc(DiscSpec const &spec)
{
  Phantom p;
  p.name = "disc";
  int const    m = half_count(spec.radius, spec.spacing);
  double const r2 = spec.radius * spec.radius;
  double const i2 = spec.inner_radius * spec.inner_radius;
  for (int j = -m; j <= m; ++j) {
    for (int i = -m; i <= m; ++i) {
      double const x = i * spec.spacing, y = j * spec.spacing;
      double const d2 = x * x + y * y;
      if (d2 > r2) { continue; }
      p.spins.push_back(make_spin(x, y, 0.0, d2 <= i2 ? spec.inner : spec.outer));
    }
  }
  Grid g = make_grid({2 * m + 1, 2 * m + 1, 1}, spec.spacing);
  for (int j = 0; j < g.dims[1]; ++j) {
    for (int i = 0; i < g.dims[0]; ++i) {
      double const x = g.origin[0] + i * spec.spacing, y = g.origin[1] + j * spec.spacing;
      double const d2 = x * x + y * y;
      if (d2 <= r2) { paint(g, std::size_t(i) + std::size_t(g.dims[0]) * j, d2 <= i2 ? spec.inner : spec.outer); }
    }
  }
  p.grid = std::move(g);
  return p;
}

Phantom make_cylinder(CylinderSpec const &spec)
{
  Phantom p;
  p.name = "cylinder";
  MotionPath flow;
  flow.v = {0.0, 0.0, spec.velocity};
  flow.region.lo = {-spec.radius, -spec.radius, -0.5 * spec.length};
  flow.region.hi = {spec.radius, spec.radius, 0.5 * spec.length};
  flow.reset_on_wrap = true;
  p.motion.push_back(flow);

  int const    m = half_count(spec.radius, spec.spacing);
  int const    nz = static_cast<int>(std::lround(spec.length / spec.spacing));
  double const r2 = spec.radius * spec.radius;
  double const l2 = spec.lumen_radius * spec.lumen_radius;
  Grid         g = make_grid({2 * m + 1, 2 * m + 1, nz}, spec.spacing);
  for (int k = 0; k < nz; ++k) {
    double const z = -0.5 * spec.length + (k + 0.5) * spec.spacing;
    for (int j = -m; j <= m; ++j) {
      for (int i = -m; i <= m; ++i) {
        double const x = i * spec.spacing, y = j * spec.spacing;
        double const d2 = x * x + y * y;
        if (d2 > r2) { continue; }
        bool const in_lumen = d2 < l2;
        p.spins.push_back(make_spin(x, y, z, in_lumen ? spec.lumen : spec.wall, in_lumen && spec.velocity != 0.0 ? 0 : -1));
        paint(g, std::size_t(i + m) + std::size_t(g.dims[0]) * (std::size_t(j + m) + std::size_t(g.dims[1]) * k),
              in_lumen ? spec.lumen : spec.wall);
      }
    }
  }
  p.grid = std::move(g);
  return p;
}

Phantom make_point(Vec3 r, Tissue t)
{
  Phantom p;
  p.name = "point";
  p.spins.push_back(make_spin(r[0], r[1], r[2], t));
  return p;
}

namespace {

struct Ellipse
{
  double x, y, a, b, phi_deg;
  Tissue t;
};

// Modified Shepp-Logan geometry on a 0.2 m field, one tissue per ellipse;
// later ellipses overwrite earlier ones.
Phantom make_shepp(double spacing)
{
  constexpr double kHalf = 0.1;
  static constexpr Ellipse kTable[] = {
    {0.0, 0.0, 0.69, 0.92, 0, {0.30F, 0.07F, 0.9F}},       // scalp
    {0.0, -0.0184, 0.6624, 0.874, 0, {0.85F, 0.09F, 0.8F}},  // grey matter
    {0.22, 0.0, 0.11, 0.31, -18, {3.0F, 1.5F, 1.0F}},      // ventricles
    {-0.22, 0.0, 0.16, 0.41, 18, {3.0F, 1.5F, 1.0F}},
    {0.0, 0.35, 0.21, 0.25, 0, {0.6F, 0.08F, 0.7F}},       // white matter
    {0.0, 0.1, 0.046, 0.046, 0, {1.2F, 0.15F, 0.9F}},
    {0.0, -0.1, 0.046, 0.046, 0, {1.2F, 0.15F, 0.9F}},
    {-0.08, -0.605, 0.046, 0.023, 0, {1.4F, 0.2F, 0.95F}},
    {0.0, -0.605, 0.023, 0.023, 0, {1.4F, 0.2F, 0.95F}},
    {0.06, -0.605, 0.023, 0.046, 0, {1.4F, 0.2F, 0.95F}},
  };
  auto tissue_at = [](double x, double y) -> Tissue const * {
    Tissue const *hit = nullptr;
    for (auto const &e : kTable) {
      double const c = std::cos(deg_to_rad(e.phi_deg)), s = std::sin(deg_to_rad(e.phi_deg));
      double const dx = x / kHalf - e.x, dy = y / kHalf - e.y;
      double const u = (dx * c + dy * s) / e.a, v = (-dx * s + dy * c) / e.b;
      if (u * u + v * v <= 1.0) { hit = &e.t; }
    }
    return hit;
  };

  Phantom p;
  p.name = "shepp2d";
  int const m = half_count(kHalf, spacing);
  Grid      g = make_grid({2 * m + 1, 2 * m + 1, 1}, spacing);
  for (int j = -m; j <= m; ++j) {
    for (int i = -m; i <= m; ++i) {
      double const x = i * spacing, y = j * spacing;
      if (Tissue const *t = tissue_at(x, y)) {
        p.spins.push_back(make_spin(x, y, 0.0, *t));
        paint(g, std::size_t(i + m) + std::size_t(g.dims[0]) * (j + m), *t);
      }
    }
  }
  p.grid = std::move(g);
  return p;
}

} // namespace

std::vector<std::string> builtin_names() { return {"disc2d", "shepp2d", "flow_cylinder"}; }

Phantom builtin(std::string_view name)
{
  Phantom p;
  if (name == "disc2d") {
    p = make_disc(DiscSpec{});
  } else if (name == "shepp2d") {
    p = make_shepp(1e-3);
  } else if (name == "flow_cylinder") {
    p = make_cylinder(CylinderSpec{});
  } else {
    throw Error(fmt::format("unknown built-in phantom '{}'", name));
  }
  p.name = std::string(name);
  return p;
}

} // namespace mrseq::phantom
