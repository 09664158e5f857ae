#include "mrseq/seq.hpp"

#include <set>

#include <fmt/format.h>
#include <json.hpp>

namespace mrseq::seq {

namespace {

using Json = nlohmann::ordered_json;

constexpr int kVersion = 1;

[[noreturn]] void fail(std::string const &path, std::string const &what) { throw SchemaError(path, what); }

std::string describe(Json const &j)
{
  switch (j.type()) {
  case Json::value_t::null: return "null";
  case Json::value_t::boolean: return "boolean";
  case Json::value_t::string: return "string";
  case Json::value_t::array: return "array";
  case Json::value_t::object: return "object";
  default: return "number";
  }
}

// Reads one JSON object, remembering which keys were consumed so leftovers
// can be rejected.
class Reader
{
public:
  Reader(Json const &j, std::string path)
    : j_(j)
    , path_(std::move(path))
  {
    if (!j.is_object()) { fail(path_.empty() ? "." : path_, fmt::format("expected object, got {}", describe(j))); }
  }

  std::string const &path() const { return path_; }
  std::string        at(std::string_view key) const { return path_ + "." + std::string(key); }

  Json const *get(std::string_view key, bool required)
  {
    seen_.insert(std::string(key));
    auto it = j_.find(key);
    if (it == j_.end()) {
      if (required) { fail(at(key), "missing required field"); }
      return nullptr;
    }
    return &*it;
  }

  std::string text(std::string_view key, bool required, std::string fallback = {})
  {
    Json const *v = get(key, required);
    if (!v) { return fallback; }
    if (!v->is_string()) { fail(at(key), fmt::format("expected string, got {}", describe(*v))); }
    return v->get<std::string>();
  }

  double number(std::string_view key, bool required, double fallback = 0.0)
  {
    Json const *v = get(key, required);
    if (!v) { return fallback; }
    if (!v->is_number()) { fail(at(key), fmt::format("expected number, got {}", describe(*v))); }
    return v->get<double>();
  }

  Expression expression(std::string_view key, bool required, char const *fallback = "0")
  {
    Json const *v = get(key, required);
    std::string src = fallback;
    if (v) {
      if (v->is_number()) {
        src = expr::format_number(v->get<double>());
      } else if (v->is_string()) {
        src = v->get<std::string>();
      } else {
        fail(at(key), fmt::format("expected expression string or number, got {}", describe(*v)));
      }
    }
    try {
      return Expression(src);
    } catch (expr::SyntaxError const &e) {
      fail(at(key), e.what());
    }
  }

  Axis axis(std::string_view key, bool required, Axis fallback = Axis::x)
  {
    std::string s = text(key, required, to_string(fallback));
    auto        a = parse_axis(s);
    if (!a) { fail(at(key), fmt::format("expected one of x, y, z, got '{}'", s)); }
    return *a;
  }

  void finish() const
  {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.contains(it.key())) {
        fail(at(it.key()), fmt::format("unknown field '{}' (mrseq_version {})", it.key(), kVersion));
      }
    }
  }

private:
  Json const           &j_;
  std::string           path_;
  std::set<std::string> seen_;
};

std::vector<Block> read_blocks(Json const &j, std::string const &path);

Block read_block(Json const &j, std::string const &path)
{
  Reader      r(j, path);
  std::string type = r.text("type", true);
  std::string label = r.text("label", false);
  Block       out;
  if (type == "rf") {
    RfPulse b;
    b.label = label;
    std::string shape = r.text("shape", true);
    if (shape == "hard") {
      b.shape = RfShape::hard;
    } else if (shape == "sinc") {
      b.shape = RfShape::sinc;
    } else {
      fail(r.at("shape"), fmt::format("expected hard or sinc, got '{}'", shape));
    }
    b.flip_angle = r.expression("flip_angle", true);
    b.duration = r.expression("duration", true);
    b.freq_offset = r.expression("freq_offset", false);
    b.phase = r.expression("phase", false);
    b.sinc_lobes = r.expression("sinc_lobes", false, "3");
    std::string axis = r.text("slice_grad_axis", false, "none");
    if (axis != "none") {
      b.slice_grad_axis = parse_axis(axis);
      if (!b.slice_grad_axis) { fail(r.at("slice_grad_axis"), fmt::format("expected none, x, y or z, got '{}'", axis)); }
    }
    b.slice_grad_amp = r.expression("slice_grad_amp", false);
    out = std::move(b);
  } else if (type == "gradient") {
    Gradient b;
    b.label = label;
    b.gx = r.expression("gx", false);
    b.gy = r.expression("gy", false);
    b.gz = r.expression("gz", false);
    b.flat_duration = r.expression("flat_duration", true);
    b.rise_time = r.expression("rise_time", false);
    out = std::move(b);
  } else if (type == "delay") {
    Delay b;
    b.label = label;
    b.duration = r.expression("duration", true);
    out = std::move(b);
  } else if (type == "readout") {
    Readout b;
    b.label = label;
    b.samples = r.expression("samples", true);
    b.duration = r.expression("duration", true);
    b.read_grad_axis = r.axis("read_grad_axis", true);
    b.read_grad_amp = r.expression("read_grad_amp", true);
    b.line_tag = r.expression("line_tag", false);
    out = std::move(b);
  } else if (type == "epi_acq") {
    EpiAcq b;
    b.label = label;
    b.n_lines = r.expression("n_lines", true);
    b.samples_per_line = r.expression("samples_per_line", true);
    b.fov = r.expression("fov", true);
    b.read_axis = r.axis("read_axis", true);
    b.phase_axis = r.axis("phase_axis", true);
    out = std::move(b);
  } else if (type == "group_ref") {
    GroupRef b;
    b.label = label;
    b.group_name = r.text("group_name", true);
    b.repetitions = r.expression("repetitions", false, "1");
    out = std::move(b);
  } else {
    fail(r.at("type"), fmt::format("unknown block type '{}' (mrseq_version {})", type, kVersion));
  }
  r.finish();
  return out;
}

std::vector<Block> read_blocks(Json const &j, std::string const &path)
{
  if (!j.is_array()) { fail(path, fmt::format("expected array, got {}", describe(j))); }
  std::vector<Block> out;
  for (std::size_t i = 0; i < j.size(); ++i) { out.push_back(read_block(j[i], fmt::format("{}[{}]", path, i))); }
  return out;
}

Json write_block(Block const &b)
{
  Json j;
  std::visit(
    [&](auto const &x) {
      using T = std::decay_t<decltype(x)>;
      if constexpr (std::is_same_v<T, RfPulse>) {
        j["type"] = "rf";
        j["label"] = x.label;
        j["shape"] = to_string(x.shape);
        j["flip_angle"] = x.flip_angle.source();
        j["duration"] = x.duration.source();
        j["freq_offset"] = x.freq_offset.source();
        j["phase"] = x.phase.source();
        j["sinc_lobes"] = x.sinc_lobes.source();
        j["slice_grad_axis"] = x.slice_grad_axis ? to_string(*x.slice_grad_axis) : "none";
        j["slice_grad_amp"] = x.slice_grad_amp.source();
      } else if constexpr (std::is_same_v<T, Gradient>) {
        j["type"] = "gradient";
        j["label"] = x.label;
        j["gx"] = x.gx.source();
        j["gy"] = x.gy.source();
        j["gz"] = x.gz.source();
        j["flat_duration"] = x.flat_duration.source();
        j["rise_time"] = x.rise_time.source();
      } else if constexpr (std::is_same_v<T, Delay>) {
        j["type"] = "delay";
        j["label"] = x.label;
        j["duration"] = x.duration.source();
      } else if constexpr (std::is_same_v<T, Readout>) {
        j["type"] = "readout";
        j["label"] = x.label;
        j["samples"] = x.samples.source();
        j["duration"] = x.duration.source();
        j["read_grad_axis"] = to_string(x.read_grad_axis);
        j["read_grad_amp"] = x.read_grad_amp.source();
        j["line_tag"] = x.line_tag.source();
      } else if constexpr (std::is_same_v<T, EpiAcq>) {
        j["type"] = "epi_acq";
        j["label"] = x.label;
        j["n_lines"] = x.n_lines.source();
        j["samples_per_line"] = x.samples_per_line.source();
        j["fov"] = x.fov.source();
        j["read_axis"] = to_string(x.read_axis);
        j["phase_axis"] = to_string(x.phase_axis);
      } else {
        j["type"] = "group_ref";
        j["label"] = x.label;
        j["group_name"] = x.group_name;
        j["repetitions"] = x.repetitions.source();
      }
    },
    b);
  return j;
}

} // namespace

SequenceDoc load_sequence(std::string_view bytes)
{
  Json root;
  try {
    root = Json::parse(bytes.begin(), bytes.end());
  } catch (Json::parse_error const &e) {
    fail("", fmt::format("invalid JSON: {}", e.what()));
  }
  Reader      r(root, "");
  Json const *version = r.get("mrseq_version", true);
  if (!version->is_number_integer() || version->get<long>() != kVersion) {
    fail(".mrseq_version", fmt::format("unsupported version {} (this reader understands mrseq_version {})", version->dump(), kVersion));
  }

  SequenceDoc doc;
  doc.description = r.text("description", false);

  Reader sc(*r.get("scanner", true), ".scanner");
  doc.scanner.b0 = sc.number("b0", true);
  doc.scanner.max_rf_amp = sc.number("max_rf_amp", true);
  doc.scanner.max_grad = sc.number("max_grad", true);
  doc.scanner.max_slew = sc.number("max_slew", true);
  doc.scanner.adc_dead_time = sc.number("adc_dead_time", false, 0.0);
  sc.finish();

  if (Json const *vars = r.get("variables", false)) {
    if (!vars->is_array()) { fail(".variables", fmt::format("expected array, got {}", describe(*vars))); }
    for (std::size_t i = 0; i < vars->size(); ++i) {
      Reader      v((*vars)[i], fmt::format(".variables[{}]", i));
      std::string name = v.text("name", true);
      Expression  e = v.expression("expr", true);
      v.finish();
      try {
        doc.variables.define(name, std::move(e));
      } catch (expr::ScopeError const &err) {
        fail(v.at("name"), err.what());
      }
    }
  }

  if (Json const *groups = r.get("groups", false)) {
    if (!groups->is_array()) { fail(".groups", fmt::format("expected array, got {}", describe(*groups))); }
    for (std::size_t i = 0; i < groups->size(); ++i) {
      Reader   g((*groups)[i], fmt::format(".groups[{}]", i));
      GroupDef def;
      def.name = g.text("name", true);
      def.blocks = read_blocks(*g.get("blocks", true), g.at("blocks"));
      g.finish();
      doc.groups.push_back(std::move(def));
    }
  }

  doc.blocks = read_blocks(*r.get("blocks", true), ".blocks");
  r.finish();
  return doc;
}

std::string save_sequence(SequenceDoc const &doc)
{
  Json root;
  root["mrseq_version"] = kVersion;
  root["description"] = doc.description;
  root["scanner"] = Json{{"b0", doc.scanner.b0},
                         {"max_rf_amp", doc.scanner.max_rf_amp},
                         {"max_grad", doc.scanner.max_grad},
                         {"max_slew", doc.scanner.max_slew},
                         {"adc_dead_time", doc.scanner.adc_dead_time}};
  Json vars = Json::array();
  for (auto const &[name, e] : doc.variables.entries()) { vars.push_back(Json{{"name", name}, {"expr", e.source()}}); }
  root["variables"] = std::move(vars);
  Json groups = Json::array();
  for (auto const &g : doc.groups) {
    Json blocks = Json::array();
    for (auto const &b : g.blocks) { blocks.push_back(write_block(b)); }
    groups.push_back(Json{{"name", g.name}, {"blocks", std::move(blocks)}});
  }
  root["groups"] = std::move(groups);
  Json blocks = Json::array();
  for (auto const &b : doc.blocks) { blocks.push_back(write_block(b)); }
  root["blocks"] = std::move(blocks);
  return root.dump(2) + "\n";
}

} // namespace mrseq::seq
