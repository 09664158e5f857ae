#pragma once

// Spin ensembles, motion, voxel-grid previews and slice geometry.

#include "mrseq/error.hpp"
#include "mrseq/seq.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mrseq::phantom {

using Vec3 = std::array<double, 3>;

// Stored in single precision so that the on-disk float32 columns round-trip
// exactly.
struct Spin
{
  std::array<float, 3> r0{};  // m
  float                t1 = 1.0F;  // s, may be +inf
  float                t2 = 0.1F;  // s, may be +inf
  float                pd = 1.0F;
  float                delta_omega = 0.0F;  // rad/s
  std::int32_t         motion_id = -1;  // index into Phantom::motion, -1 for static

  friend bool operator==(Spin const &, Spin const &) = default;
};

struct Box
{
  Vec3 lo{}, hi{};

  friend bool operator==(Box const &, Box const &) = default;
};

enum class MotionKind { constant_velocity };

// Constant velocity, wrapped periodically into `region` along every moving axis.
struct MotionPath
{
  MotionKind kind = MotionKind::constant_velocity;
  Vec3       v{};  // m/s
  Box        region;
  bool       reset_on_wrap = true;

  friend bool operator==(MotionPath const &, MotionPath const &) = default;
};

// Voxel maps for the slice viewer; x varies fastest.
struct Grid
{
  Vec3                 origin{};  // centre of voxel (0,0,0), m
  Vec3                 spacing{};
  std::array<int, 3>   dims{};
  std::vector<float>   pd, t1, t2;

  std::size_t voxels() const { return std::size_t(dims[0]) * dims[1] * dims[2]; }

  friend bool operator==(Grid const &, Grid const &) = default;
};

struct Phantom
{
  std::string             name;
  std::vector<Spin>       spins;
  std::vector<MotionPath> motion;
  std::optional<Grid>     grid;

  friend bool operator==(Phantom const &, Phantom const &) = default;
};

class NoGrid : public Error
{
public:
  explicit NoGrid(std::string const &name)
    : Error("phantom '" + name + "' has no voxel grid")
  {
  }
};

class RangeError : public Error
{
public:
  using Error::Error;
};

// Truncated or inconsistent binary payload.
class TruncatedPayload : public Error
{
public:
  using Error::Error;
};

// Throws SchemaError on a bad motion_id or inconsistent grid.
void check(Phantom const &p);

Vec3 position_at(Spin const &spin, std::vector<MotionPath> const &motion, double t);

// Times in (t0, t1] at which the spin re-enters its region, ascending.
std::vector<double> wrap_events(Spin const &spin, std::vector<MotionPath> const &motion, double t0, double t1);

struct SlicePlane
{
  seq::Axis axis = seq::Axis::z;
  double    center_offset = 0.0;  // m
  double    thickness = 0.0;  // m

  friend bool operator==(SlicePlane const &, SlicePlane const &) = default;
};

// Geometry of the first RF event played under a single-axis gradient.
std::optional<SlicePlane> slice_from_sequence(seq::EventTimeline const &tl);

enum class Plane { axial, coronal, sagittal };
enum class Quantity { pd, t1, t2 };

std::optional<Plane> parse_plane(std::string_view s);
char const          *to_string(Plane p);

// Row-major image; columns run along u, rows along v.
struct SliceImage
{
  int                rows = 0, cols = 0;
  std::vector<float> values;
  char               u_axis = 'x', v_axis = 'y';
  double             u_min = 0, u_max = 0, v_min = 0, v_max = 0;  // voxel-edge extent, m
};

// axial: fixed z, u=x, v=y. coronal: fixed y, u=x, v=z. sagittal: fixed x, u=y, v=z.
SliceImage orthogonal_slices(Phantom const &p, Plane plane, int index, Quantity q = Quantity::pd);

// "MRPH" binary: magic, u32 version, u32 header length, JSON header, then
// little-endian float32 columns x,y,z,t1,t2,pd,delta_omega,motion_id and the
// grid volumes pd,t1,t2.
Phantom           load_phantom(std::string_view bytes);
std::string       save_phantom(Phantom const &p);

struct Tissue
{
  float t1 = 1.0F, t2 = 0.1F, pd = 1.0F;
};

// Hollow cylinder along z centred on the origin; the lumen flows along +z
// and wraps over the cylinder length.
struct CylinderSpec
{
  double radius = 0.02;
  double lumen_radius = 0.01;
  double length = 0.02;
  double spacing = 1e-3;
  Tissue wall{1.0F, 0.1F, 1.0F};
  Tissue lumen{1.0F, 0.1F, 1.0F};
  double velocity = 0.1;  // m/s
};

Phantom make_cylinder(CylinderSpec const &spec);

// Disc of `outer` tissue with a concentric inner disc, in the z=0 plane.
struct DiscSpec
{
  double radius = 0.08;
  double inner_radius = 0.04;
  double spacing = 1e-3;
  Tissue outer{0.8F, 0.08F, 1.0F};
  Tissue inner{0.4F, 0.04F, 0.7F};
};

Phantom make_disc(DiscSpec const &spec);
Phantom make_point(Vec3 r, Tissue t);

// Built-ins: disc2d, shepp2d, flow_cylinder.
std::vector<std::string> builtin_names();
Phantom                  builtin(std::string_view name);

} // namespace mrseq::phantom
