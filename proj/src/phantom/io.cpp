#include "mrseq/binary.hpp"
#include "mrseq/phantom.hpp"

#include <cmath>

#include <fmt/format.h>
#include <json.hpp>

namespace mrseq::phantom {

namespace {

using Json = nlohmann::ordered_json;

constexpr char          kMagic[] = "MRPH";
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t   kColumns = 8;

Json vec(Vec3 const &v) { return Json::array({v[0], v[1], v[2]}); }

Vec3 read_vec(Json const &j, std::string const &path)
{
  if (!j.is_array() || j.size() != 3) { throw SchemaError(path, "expected 3-element array"); }
  Vec3 v{};
  for (std::size_t i = 0; i < 3; ++i) {
    if (!j[i].is_number()) { throw SchemaError(path, "expected numbers"); }
    v[i] = j[i].get<double>();
  }
  return v;
}

Json const &require(Json const &j, char const *key, std::string const &path)
{
  auto it = j.find(key);
  if (it == j.end()) { throw SchemaError(path + "." + key, "missing required field"); }
  return *it;
}

} // namespace

std::string save_phantom(Phantom const &p)
{
  Json h;
  h["name"] = p.name;
  h["n_spins"] = p.spins.size();
  Json motion = Json::array();
  for (auto const &m : p.motion) {
    motion.push_back(Json{{"kind", "constant_velocity"},
                          {"v", vec(m.v)},
                          {"region", Json{{"lo", vec(m.region.lo)}, {"hi", vec(m.region.hi)}}},
                          {"reset_on_wrap", m.reset_on_wrap}});
  }
  h["motion"] = std::move(motion);
  if (p.grid) {
    h["grid"] = Json{{"origin", vec(p.grid->origin)},
                     {"spacing", vec(p.grid->spacing)},
                     {"dims", Json::array({p.grid->dims[0], p.grid->dims[1], p.grid->dims[2]})}};
  } else {
    h["grid"] = nullptr;
  }

  std::string out = binary::frame(kMagic, kVersion, h.dump());
  std::size_t const n = p.spins.size();
  out.reserve(out.size() + 4 * n * kColumns + (p.grid ? 12 * p.grid->voxels() : 0));
  for (int a = 0; a < 3; ++a) {
    for (auto const &s : p.spins) { binary::put_f32(out, s.r0[a]); }
  }
  for (auto const &s : p.spins) { binary::put_f32(out, s.t1); }
  for (auto const &s : p.spins) { binary::put_f32(out, s.t2); }
  for (auto const &s : p.spins) { binary::put_f32(out, s.pd); }
  for (auto const &s : p.spins) { binary::put_f32(out, s.delta_omega); }
  for (auto const &s : p.spins) { binary::put_f32(out, static_cast<float>(s.motion_id)); }
  if (p.grid) {
    for (auto const *vol : {&p.grid->pd, &p.grid->t1, &p.grid->t2}) {
      for (float f : *vol) { binary::put_f32(out, f); }
    }
  }
  return out;
}

Phantom load_phantom(std::string_view bytes)
{
  binary::Frame const f = binary::unframe(bytes, kMagic);
  if (f.version != kVersion) { throw SchemaError(".version", fmt::format("unsupported phantom version {}", f.version)); }
  Json h;
  try {
    h = Json::parse(f.header.begin(), f.header.end());
  } catch (Json::parse_error const &e) {
    throw SchemaError("", fmt::format("invalid header JSON: {}", e.what()));
  }
  if (!h.is_object()) { throw SchemaError("", "header must be an object"); }

  Phantom p;
  Json const &name = require(h, "name", "");
  if (!name.is_string()) { throw SchemaError(".name", "expected string"); }
  p.name = name.get<std::string>();
  Json const &count = require(h, "n_spins", "");
  if (!count.is_number_unsigned()) { throw SchemaError(".n_spins", "expected non-negative integer"); }
  std::size_t const n = count.get<std::size_t>();

  Json const &motion = require(h, "motion", "");
  if (!motion.is_array()) { throw SchemaError(".motion", "expected array"); }
  for (std::size_t i = 0; i < motion.size(); ++i) {
    std::string const path = fmt::format(".motion[{}]", i);
    Json const       &m = motion[i];
    if (!m.is_object()) { throw SchemaError(path, "expected object"); }
    Json const &kind = require(m, "kind", path);
    if (kind != "constant_velocity") { throw SchemaError(path + ".kind", "expected constant_velocity"); }
    MotionPath mp;
    mp.v = read_vec(require(m, "v", path), path + ".v");
    Json const &region = require(m, "region", path);
    mp.region.lo = read_vec(require(region, "lo", path + ".region"), path + ".region.lo");
    mp.region.hi = read_vec(require(region, "hi", path + ".region"), path + ".region.hi");
    Json const &reset = require(m, "reset_on_wrap", path);
    if (!reset.is_boolean()) { throw SchemaError(path + ".reset_on_wrap", "expected boolean"); }
    mp.reset_on_wrap = reset.get<bool>();
    p.motion.push_back(mp);
  }

  Json const &grid = require(h, "grid", "");
  if (!grid.is_null()) {
    Grid g;
    g.origin = read_vec(require(grid, "origin", ".grid"), ".grid.origin");
    g.spacing = read_vec(require(grid, "spacing", ".grid"), ".grid.spacing");
    Vec3 const dims = read_vec(require(grid, "dims", ".grid"), ".grid.dims");
    for (int a = 0; a < 3; ++a) {
      if (dims[a] != std::floor(dims[a]) || dims[a] < 1 || dims[a] > 1e5) { throw SchemaError(".grid.dims", "expected positive integers"); }
      g.dims[a] = static_cast<int>(dims[a]);
    }
    p.grid = std::move(g);
  }

  std::size_t const voxels = p.grid ? p.grid->voxels() : 0;
  std::size_t const expected = 4 * (n * kColumns + 3 * voxels);
  if (f.payload.size() != expected) {
    throw TruncatedPayload(fmt::format("payload is {} bytes, header implies {}", f.payload.size(), expected));
  }

  p.spins.resize(n);
  std::size_t at = 0;
  auto next = [&] {
    float const v = binary::get_f32(f.payload, at);
    at += 4;
    return v;
  };
  for (int a = 0; a < 3; ++a) {
    for (auto &s : p.spins) { s.r0[a] = next(); }
  }
  for (auto &s : p.spins) { s.t1 = next(); }
  for (auto &s : p.spins) { s.t2 = next(); }
  for (auto &s : p.spins) { s.pd = next(); }
  for (auto &s : p.spins) { s.delta_omega = next(); }
  for (std::size_t i = 0; i < n; ++i) {
    float const id = next();
    if (id != std::floor(id) || std::abs(id) > 1e6F) { throw SchemaError(fmt::format(".spins[{}].motion_id", i), "not an integer"); }
    p.spins[i].motion_id = static_cast<std::int32_t>(id);
  }
  if (p.grid) {
    for (auto *vol : {&p.grid->pd, &p.grid->t1, &p.grid->t2}) {
      vol->resize(voxels);
      for (float &v : *vol) { v = next(); }
    }
  }
  check(p);
  return p;
}

} // namespace mrseq::phantom
