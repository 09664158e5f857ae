#include "mrseq/wire.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace mrseq::wire {

Json to_json(seq::PlotSeries const &s)
{
  return Json{{"t", s.t},   {"rf_mag", s.rf_mag}, {"rf_phase", s.rf_phase}, {"gx", s.gx},
              {"gy", s.gy}, {"gz", s.gz},         {"adc", s.adc_mask}};
}

Json to_json(std::vector<seq::Violation> const &v)
{
  Json out = Json::array();
  for (auto const &x : v) {
    Json j{{"path", x.path}, {"kind", x.kind}, {"message", x.message}};
    if (x.axis) { j["axis"] = seq::to_string(*x.axis); }
    out.push_back(std::move(j));
  }
  return out;
}

Json to_json(phantom::SliceImage const &s)
{
  return Json{{"rows", s.rows},
              {"cols", s.cols},
              {"u_axis", std::string(1, s.u_axis)},
              {"v_axis", std::string(1, s.v_axis)},
              {"u_range", {s.u_min, s.u_max}},
              {"v_range", {s.v_min, s.v_max}},
              {"values", s.values}};
}

Json to_json(std::optional<phantom::SlicePlane> const &p)
{
  if (!p) { return nullptr; }
  return Json{{"axis", seq::to_string(p->axis)}, {"center_offset", p->center_offset}, {"thickness", p->thickness}};
}

bloch::SimConfig sim_config(nlohmann::json const &j, std::string const &where)
{
  bloch::SimConfig cfg;
  if (j.is_null()) { return cfg; }
  if (!j.is_object()) { throw SchemaError(where, "expected an object"); }
  auto number = [&](char const *key, double &out) {
    if (!j.contains(key)) { return; }
    if (!j[key].is_number()) { throw SchemaError(where + "." + key, "expected a number"); }
    out = j[key].get<double>();
    if (!(out > 0.0)) { throw SchemaError(where + "." + key, "must be positive"); }
  };
  number("dt_rf", cfg.dt_rf);
  number("dt_grad", cfg.dt_grad);
  if (j.contains("threads")) {
    if (!j["threads"].is_number_integer() || j["threads"].get<int>() < 0) {
      throw SchemaError(where + ".threads", "expected a non-negative integer");
    }
    cfg.threads = j["threads"].get<int>();
  }
  if (j.contains("kernel")) {
    std::string const k = j["kernel"].is_string() ? j["kernel"].get<std::string>() : "";
    if (k == "auto") {
      cfg.kernel = bloch::KernelKind::automatic;
    } else if (k == "scalar") {
      cfg.kernel = bloch::KernelKind::scalar;
    } else if (k == "avx2") {
      cfg.kernel = bloch::KernelKind::avx2;
    } else {
      throw SchemaError(where + ".kernel", "expected one of auto, scalar, avx2");
    }
  }
  if (cfg.dt_rf > cfg.dt_grad) { throw SchemaError(where + ".dt_rf", "dt_rf must not exceed dt_grad"); }
  return cfg;
}

phantom::Phantom resolve_phantom(std::string const &spec)
{
  auto const names = phantom::builtin_names();
  if (std::find(names.begin(), names.end(), spec) != names.end()) { return phantom::builtin(spec); }
  std::ifstream in(spec, std::ios::binary);
  if (!in) { throw Error(fmt::format("'{}' is neither a built-in phantom nor a readable file", spec)); }
  std::ostringstream ss;
  ss << in.rdbuf();
  return phantom::load_phantom(ss.str());
}

} // namespace mrseq::wire
