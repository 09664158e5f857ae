#include "mrseq/constants.hpp"
#include "mrseq/seq.hpp"

#include "../common/seq_helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <regex>

using namespace mrseq;
using namespace mrseq::seq;
using namespace testing_helpers;

namespace {

Expression E(char const *s) { return Expression(s); }

SequenceDoc empty_doc()
{
  SequenceDoc d;
  d.scanner = Scanner{};
  return d;
}

Delay delay(char const *d)
{
  Delay b;
  b.duration = E(d);
  return b;
}

GroupRef ref(char const *name, char const *reps)
{
  GroupRef g;
  g.group_name = name;
  g.repetitions = E(reps);
  return g;
}

// k (1/m) at every ADC sample, by exact integration of the piecewise-linear gradients.
std::vector<std::array<double, 3>> sample_k(EventTimeline const &tl)
{
  std::vector<std::array<double, 3>> out;
  std::array<double, 3>              k{};
  for (auto const &e : tl.events) {
    if (e.adc) {
      for (int i = 0; i < e.adc->n_samples; ++i) {
        double const t = e.sample_time(i) - e.t_start;
        auto const   g = e.grad_at(e.sample_time(i));
        std::array<double, 3> ks{};
        for (int a = 0; a < 3; ++a) { ks[a] = k[a] + kGammaBar * 0.5 * (e.g0[a] + g[a]) * t; }
        out.push_back(ks);
      }
    }
    for (int a = 0; a < 3; ++a) { k[a] += kGammaBar * 0.5 * (e.g0[a] + e.g1[a]) * e.duration(); }
  }
  return out;
}

} // namespace

TEST_CASE("group repetition and nesting")
{
  SequenceDoc d = empty_doc();
  d.groups.push_back(GroupDef{"G", {delay("1e-3")}});
  d.blocks.push_back(ref("G", "3"));
  auto tl = flatten(d);
  REQUIRE(tl.events.size() == 3);
  CHECK(tl.total_duration == doctest::Approx(3e-3).epsilon(1e-12));
  for (std::size_t i = 0; i + 1 < tl.events.size(); ++i) { CHECK(tl.events[i].t_end == tl.events[i + 1].t_start); }

  SequenceDoc n = empty_doc();
  n.groups.push_back(GroupDef{"inner", {delay("1e-3")}});
  n.groups.push_back(GroupDef{"outer", {ref("inner", "2")}});
  n.blocks.push_back(ref("outer", "2"));
  CHECK(flatten(n).events.size() == 4);
}

TEST_CASE("loop counters bind per repetition")
{
  SequenceDoc d = empty_doc();
  d.variables.define("N", E("8"));
  d.variables.define("dky", E("1/0.24"));
  d.variables.define("tau", E("1e-3"));
  Gradient g;
  g.gy = E("(rep - N/2) * dky / (gamma * tau)");
  g.flat_duration = E("tau");
  g.rise_time = E("1e-4");
  Delay inner = delay("rep_outer*1e-3 + 1e-3");
  d.groups.push_back(GroupDef{"pe", {g}});
  d.groups.push_back(GroupDef{"outer", {inner}});
  d.blocks.push_back(ref("pe", "N"));
  d.blocks.push_back(ref("outer", "2"));
  auto tl = flatten(d);

  std::vector<double> amps;
  for (auto const &e : tl.events) {
    if (e.origin == ".groups[0].blocks[0]" && e.duration() == doctest::Approx(1e-3)) { amps.push_back(e.g0[1]); }
  }
  REQUIRE(amps.size() == 8);
  double const step = (1 / 0.24) / (kGammaBar * 1e-3);
  for (int r = 0; r < 8; ++r) { CHECK(amps[r] == doctest::Approx((r - 4) * step).epsilon(1e-12)); }
  CHECK(tl.events.back().duration() == doctest::Approx(2e-3));

  // `rep` has no value outside a group.
  SequenceDoc bad = empty_doc();
  bad.blocks.push_back(delay("rep*1e-3"));
  try {
    flatten(bad);
    FAIL("expected an error");
  } catch (FlattenError const &e) {
    CHECK(e.path() == ".blocks[0].duration");
    CHECK(e.kind() == "expression");
  }
}

TEST_CASE("spin echo example: TR group drives 100 lines of 100 samples")
{
  SequenceDoc doc = example("spin_echo");
  auto const *g = doc.find_group("TR");
  REQUIRE(g);
  auto const &top = std::get<GroupRef>(doc.blocks.at(0));
  CHECK(top.group_name == "TR");
  CHECK(top.repetitions.source() == "N_matrix");
  auto const &ro = std::get<Readout>(g->blocks.at(7));
  CHECK(ro.samples.source() == "N_matrix");

  auto tl = flatten(doc);
  std::vector<int> tags;
  for (auto const &e : tl.events) {
    if (e.adc) {
      CHECK(e.adc->n_samples == 100);
      tags.push_back(e.adc->line_tag);
    }
  }
  REQUIRE(tags.size() == 100);
  for (int i = 0; i < 100; ++i) { CHECK(tags[i] == i); }
  CHECK(validate(doc).empty());

  double sum = 0.0;
  for (auto const &e : tl.events) { sum += e.duration(); }
  CHECK(std::abs(sum - tl.total_duration) < 1e-9);
  CHECK(std::abs(tl.total_duration - 100 * 0.5) < 1e-9);
}

TEST_CASE("spin echo example: echo and k-space centre coincide at TE")
{
  SequenceDoc doc = example("spin_echo");
  doc.variables.set("N_matrix", E("8"));
  auto tl = flatten(doc);
  auto ks = sample_k(tl);

  // After the 180 degree pulse the accumulated phase flips sign.
  std::vector<double> rf_centres;
  for (auto const &e : tl.events) {
    if (e.rf) { rf_centres.push_back(0.5 * (e.t_start + e.t_end)); }
  }
  double const dk = 1 / 0.24;
  int          line = 0;
  for (auto const &e : tl.events) {
    if (!e.adc) { continue; }
    double const t90 = rf_centres.at(2 * line), t180 = rf_centres.at(2 * line + 1);
    CHECK(e.sample_time(4) - t90 == doctest::Approx(20e-3).epsilon(1e-9));
    CHECK(t180 - t90 == doctest::Approx(10e-3).epsilon(1e-9));

    // Gradient moment relative to the refocusing pulse: integrate only after it.
    std::array<double, 3> k{};
    for (auto const &f : tl.events) {
      if (f.t_start >= t90 - 1e-12 && f.t_end <= e.t_start + 1e-12 && !f.rf) {
        double const sign = f.t_start < t180 ? -1.0 : 1.0;
        for (int a = 0; a < 3; ++a) { k[a] += sign * kGammaBar * 0.5 * (f.g0[a] + f.g1[a]) * f.duration(); }
      }
      if (f.rf && std::abs(0.5 * (f.t_start + f.t_end) - t180) < 1e-12) {
        // Slice gradient flat under the refocusing pulse is symmetric about its centre.
      }
    }
    double const gx = e.g0[0];
    for (int i = 0; i < 8; ++i) {
      double const kx = k[0] + kGammaBar * gx * (i + 0.5) * e.duration() / 8;
      CHECK(kx == doctest::Approx((i - 4) * dk).epsilon(1e-9).scale(dk));
    }
    CHECK(k[1] == doctest::Approx((line - 4) * dk).epsilon(1e-9).scale(dk));
    ++line;
  }
  CHECK(line == 8);
}

TEST_CASE("validate reports limit breaches")
{
  SequenceDoc d = empty_doc();
  Gradient    g;
  g.gy = E("0.08");
  g.flat_duration = E("1e-3");
  d.blocks.push_back(g);
  auto v = validate(d);
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == "grad_amplitude");
  CHECK(v[0].path == ".blocks[0].gy");
  CHECK(v[0].axis == Axis::y);

  // Derived ramps satisfy the slew limit by construction.
  SequenceDoc t = empty_doc();
  Gradient    tr;
  tr.gx = E("0.03");
  tr.flat_duration = E("2e-4 - 0.03/150");
  t.blocks.push_back(tr);
  CHECK(validate(t).empty());
  auto tl = flatten(t);
  REQUIRE(tl.events.size() >= 2);
  CHECK(tl.events[0].duration() == doctest::Approx(0.03 / 150).epsilon(1e-12));
  std::get<Gradient>(t.blocks[0]).flat_duration = E("1e-4 - 0.03/150");
  auto neg = validate(t);
  REQUIRE(neg.size() == 1);
  CHECK(neg[0].kind == "negative_duration");
  CHECK(neg[0].path == ".blocks[0].flat_duration");

  // An explicit ramp that is too short is fatal for flatten.
  std::get<Gradient>(t.blocks[0]).flat_duration = E("1e-3");
  std::get<Gradient>(t.blocks[0]).rise_time = E("1e-5");
  CHECK_THROWS_AS(flatten(t), FlattenError);
  auto slew = validate(t);
  REQUIRE(slew.size() == 1);
  CHECK(slew[0].kind == "slew");
  CHECK(slew[0].axis == Axis::x);

  SequenceDoc rf = empty_doc();
  RfPulse     p;
  p.flip_angle = E("90");
  p.duration = E("10e-6");
  rf.blocks.push_back(p);
  auto rv = validate(rf);
  REQUIRE(rv.size() == 1);
  CHECK(rv[0].kind == "rf_amplitude");
  CHECK_NOTHROW(flatten(rf));
}

TEST_CASE("validate collects expression errors and dead time")
{
  SequenceDoc d = empty_doc();
  d.scanner.adc_dead_time = 1e-3;
  d.variables.define("a", E("b"));
  d.variables.define("b", E("a"));
  RfPulse p;
  p.flip_angle = E("10");
  p.duration = E("1e-3");
  Readout r;
  r.samples = E("16");
  r.duration = E("1e-3");
  r.read_grad_amp = E("0");
  d.blocks.push_back(p);
  d.blocks.push_back(r);
  d.blocks.push_back(delay("missing"));
  d.blocks.push_back(ref("nope", "1"));
  auto v = validate(d);
  std::set<std::string> kinds;
  for (auto const &x : v) { kinds.insert(x.kind + "@" + x.path); }
  CHECK(kinds.contains("expression@.variables"));
  CHECK(kinds.contains("adc_dead_time@.blocks[1]"));
  CHECK(kinds.contains("expression@.blocks[2].duration"));
  CHECK(kinds.contains("unknown_group@.blocks[3].group_name"));

  SequenceDoc c = empty_doc();
  c.groups.push_back(GroupDef{"a", {ref("a", "1")}});
  c.blocks.push_back(ref("a", "1"));
  try {
    flatten(c);
    FAIL("expected cycle");
  } catch (FlattenError const &e) {
    CHECK(e.kind() == "cyclic_group");
  }
}

TEST_CASE("bundled examples validate and flatten")
{
  for (auto const &name : example_names()) {
    INFO(name);
    auto doc = example(name);
    auto v = validate(doc);
    for (auto const &x : v) { INFO(x.path << " " << x.kind << " " << x.message); }
    CHECK(v.empty());
    CHECK(flatten(doc).adc_events() > 0);
  }
  auto epi = flatten(example("ge_epi"));
  CHECK(epi.adc_events() == 100);
  CHECK(epi.adc_samples() == 100 * 100);
}

TEST_CASE("EPI expansion covers the Cartesian grid")
{
  Scanner sc;
  auto    small = expand_epi(EpiParams{2, 2, 0.24, Axis::x, Axis::y}, sc);
  int     readouts = 0, blips = 0;
  std::vector<double> signs;
  for (std::size_t i = 1; i < small.size(); ++i) {
    if (auto const *r = std::get_if<Readout>(&small[i])) {
      ++readouts;
      signs.push_back(expr::evaluate(r->read_grad_amp, {}));
    } else {
      ++blips;
    }
  }
  CHECK(readouts == 2);
  CHECK(blips == 1);
  REQUIRE(signs.size() == 2);
  CHECK(signs[0] * signs[1] < 0);

  CHECK_THROWS_AS(expand_epi(EpiParams{4, 4, 0.24, Axis::x, Axis::x}, sc), FlattenError);

  for (int n : {2, 5, 32, 100}) {
    INFO(n);
    SequenceDoc d = empty_doc();
    EpiAcq      e;
    e.n_lines = E(std::to_string(n).c_str());
    e.samples_per_line = E(std::to_string(n).c_str());
    e.fov = E("0.24");
    e.read_axis = Axis::x;
    e.phase_axis = Axis::y;
    d.blocks.push_back(e);
    CHECK(validate(d).empty());
    auto tl = flatten(d);
    auto ks = sample_k(tl);
    REQUIRE(ks.size() == std::size_t(n) * n);
    double const dk = 1 / 0.24;
    std::size_t  s = 0;
    for (auto const &ev : tl.events) {
      if (!ev.adc) { continue; }
      int const row = ev.adc->line_tag;
      for (int i = 0; i < n; ++i, ++s) {
        int const col = ev.adc->reversed ? n - 1 - i : i;
        CHECK(ks[s][0] == doctest::Approx((col - n / 2) * dk).scale(dk).epsilon(1e-9));
        CHECK(ks[s][1] == doctest::Approx((row - n / 2) * dk).scale(dk).epsilon(1e-9));
        CHECK(ks[s][2] == 0.0);
      }
    }
  }
}

TEST_CASE("diagram series")
{
  SequenceDoc d = empty_doc();
  d.scanner.max_rf_amp = 1.0;
  RfPulse p;
  p.flip_angle = E("90");
  p.duration = E("1e-3");
  d.blocks.push_back(p);
  auto s = diagram_series(flatten(d), 1e-4);
  REQUIRE(s.t.size() == 11);
  for (int i = 0; i < 10; ++i) {
    CHECK(s.rf_mag[i] == s.rf_mag[0]);
    CHECK(s.gx[i] == 0.0);
  }
  CHECK(s.rf_mag[0] == doctest::Approx(kPi / 2 / (kGamma * 1e-3)));
  CHECK(s.rf_mag[10] == 0.0);

  SequenceDoc g = empty_doc();
  Gradient    tr;
  tr.gx = E("0.03");
  tr.flat_duration = E("1e-3");
  g.blocks.push_back(tr);
  auto tl = flatten(g);
  REQUIRE(tl.events.size() == 3);
  auto gs = diagram_series(tl, 7e-5);
  auto value_at = [&](double t) {
    for (std::size_t i = 0; i < gs.t.size(); ++i) {
      if (gs.t[i] == t) { return gs.gx[i]; }
    }
    FAIL("boundary missing");
    return 0.0;
  };
  CHECK(value_at(tl.events[1].t_start) == 0.03);
  CHECK(value_at(tl.events[2].t_start) == 0.03);
  CHECK(value_at(tl.total_duration) == 0.0);
  for (std::size_t i = 0; i < gs.t.size(); ++i) {
    double const t = gs.t[i];
    double const r = tl.events[0].duration();
    double       expect = t < r ? 0.03 * t / r : t < r + 1e-3 ? 0.03 : t < tl.total_duration ? 0.03 * (tl.total_duration - t) / r : 0.0;
    CHECK(gs.gx[i] == doctest::Approx(expect).epsilon(1e-9).scale(0.03));
  }
  for (std::size_t i = 1; i < gs.t.size(); ++i) { CHECK(gs.t[i] > gs.t[i - 1]); }

  auto e = diagram_series(EventTimeline{}, 1e-4);
  CHECK(e.t.empty());
  CHECK(e.adc_mask.empty());
}

TEST_CASE("sequence file round trip and schema errors")
{
  for (auto const &name : example_names()) {
    std::string canonical = example_source(name);
    CHECK(save_sequence(load_sequence(canonical)) == canonical);
    CHECK(load_sequence(canonical) == example(name));
  }

  auto error_path = [](std::string const &text) -> std::string {
    try {
      load_sequence(text);
    } catch (SchemaError const &e) {
      return e.path();
    }
    return "<none>";
  };
  std::string const scanner = R"("scanner": {"max_rf_amp": 1e-5, "max_grad": 0.04, "max_slew": 150})";
  CHECK(error_path(R"({"mrseq_version": 1, )" + scanner + R"(, "blocks": []})") == ".scanner.b0");
  std::string const ok_scanner = R"("scanner": {"b0": 3, "max_rf_amp": 1e-5, "max_grad": 0.04, "max_slew": 150})";
  CHECK(error_path(R"({"mrseq_version": 1, )" + ok_scanner + R"(, "blocks": [{"type": "spiral"}]})") == ".blocks[0].type");
  CHECK(error_path(R"({"mrseq_version": 1, )" + ok_scanner + R"(, "blocks": [{"type": "delay", "duration": "1", "x": 1}]})") ==
        ".blocks[0].x");
  CHECK(error_path(R"({"mrseq_version": 2, )" + ok_scanner + R"(, "blocks": []})") == ".mrseq_version");
  CHECK(error_path(R"({"mrseq_version": 1, )" + ok_scanner + R"(, "blocks": [{"type": "delay", "duration": "1+"}]})") ==
        ".blocks[0].duration");
  CHECK(error_path(R"({"mrseq_version": 1, )" + ok_scanner +
                   R"(, "variables": [{"name": "gamma", "expr": "1"}], "blocks": []})") == ".variables[0].name");
  CHECK(error_path("not json") == "");

  try {
    load_sequence(R"({"mrseq_version": 1, )" + ok_scanner + R"(, "blocks": [{"type": "spiral"}]})");
  } catch (SchemaError const &e) {
    CHECK(std::string(e.what()).find("spiral") != std::string::npos);
    CHECK(std::string(e.what()).find("mrseq_version 1") != std::string::npos);
  }

  // Numbers are accepted and stored as expression text.
  auto doc = load_sequence(R"({"mrseq_version": 1, )" + ok_scanner + R"(, "blocks": [{"type": "delay", "duration": 0.001}]})");
  CHECK(std::get<Delay>(doc.blocks[0]).duration.source() == "0.001");
}

TEST_CASE("changing a variable re-flattens exactly the dependent events")
{
  for (std::string var : {"TE", "TR", "G_c", "T_ro"}) {
    INFO(var);
    SequenceDoc base = example("spin_echo");
    base.variables.set("N_matrix", E("6"));
    SequenceDoc changed = base;
    double const v = expr::evaluate(*base.variables.find(var), base.variables);
    changed.variables.set(var, Expression(expr::format_number(v * 1.1)));
    auto a = flatten(base);
    auto b = flatten(changed);
    REQUIRE(a.events.size() == b.events.size());
    int differing = 0;
    for (std::size_t i = 0; i < a.events.size(); ++i) {
      Block const *blk = resolve(base, a.events[i].origin);
      REQUIRE(blk);
      bool depends = false;
      for (auto const *e : expressions_of(*blk)) { depends = depends || transitive_identifiers(*e, base.variables).contains(var); }
      // Dependent events may still come out equal when terms cancel (d3 absorbs G_c exactly).
      bool const changed = !same_content(a.events[i], b.events[i]);
      INFO(a.events[i].origin);
      CHECK((!changed || depends));
      differing += changed;
    }
    CHECK(differing > 0);
  }
}
