// mrseq: validate, plot and simulate sequence files without the server.

#include "mrseq/pipeline.hpp"
#include "mrseq/wire.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace mrseq;
namespace fs = std::filesystem;

namespace {

enum Exit { ok = 0, domain = 1, input = 2, internal = 3 };

// I/O failure on a file named by the user.
struct InputError : Error
{
  using Error::Error;
};

std::string read_file(std::string const &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) { throw InputError(fmt::format("cannot read '{}'", path)); }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(std::string const &path, std::string_view bytes)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !out.write(bytes.data(), std::streamsize(bytes.size()))) {
    throw InputError(fmt::format("cannot write '{}'", path));
  }
}

void print_violations(std::vector<seq::Violation> const &v)
{
  for (auto const &x : v) { fmt::print(stderr, "{}: {}: {}\n", x.path, x.kind, x.message); }
}

int cmd_validate(std::string const &file)
{
  auto const doc = seq::load_sequence(read_file(file));
  auto const v = seq::validate(doc);
  if (!v.empty()) {
    print_violations(v);
    return domain;
  }
  auto const tl = seq::flatten(doc);
  fmt::print("ok: {} events, {} ADC lines, {:.6g} s\n", tl.events.size(), tl.adc_events(), tl.total_duration);
  return ok;
}

int cmd_plot(std::string const &file, std::string const &out, double dt)
{
  auto const doc = seq::load_sequence(read_file(file));
  auto const series = seq::diagram_series(seq::flatten(doc), dt);
  write_file(out, wire::to_json(series).dump());
  return ok;
}

struct SimArgs
{
  std::string file, phantom, out;
  double      dt_rf = 1e-6, dt_grad = 10e-6;
  int         threads = 0;
  bool        seed_check = false;
};

int cmd_sim(SimArgs const &a)
{
  auto const doc = seq::load_sequence(read_file(a.file));
  phantom::Phantom ph;
  try {
    ph = wire::resolve_phantom(a.phantom);
  } catch (SchemaError const &) {
    throw;
  } catch (Error const &e) {
    throw InputError(e.what());
  }
  bloch::SimConfig cfg;
  cfg.dt_rf = a.dt_rf;
  cfg.dt_grad = a.dt_grad;
  cfg.threads = a.threads;

  auto const t0 = std::chrono::steady_clock::now();
  auto const r = run_pipeline(doc, ph, cfg);
  std::chrono::duration<double> const dt = std::chrono::steady_clock::now() - t0;
  write_file(a.out, r.bytes);
  fmt::print("{} spins, {} samples, {}x{} image, {:.3f} s\n", ph.spins.size(), r.raw.samples.size(), r.image.rows,
             r.image.cols, dt.count());

  if (a.seed_check) {
    // Rerun single-threaded; the result must not depend on scheduling.
    cfg.threads = 1;
    if (run_pipeline(doc, ph, cfg).bytes != r.bytes) {
      fmt::print(stderr, "determinism check failed: single-threaded rerun differs\n");
      return internal;
    }
    fmt::print("determinism check passed\n");
  }
  return ok;
}

int cmd_export(std::string const &dir)
{
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) { throw InputError(fmt::format("cannot create '{}': {}", dir, ec.message())); }
  for (auto const &name : seq::example_names()) {
    fs::path const p = fs::path(dir) / (name + ".json");
    write_file(p.string(), seq::example_source(name));
    fmt::print("{}\n", p.string());
  }
  return ok;
}

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"MRI pulse sequence validation and Bloch simulation"};
  app.require_subcommand(1);

  std::string file, out, dir;
  double      plot_dt = 1e-5;
  SimArgs     sim;

  auto *validate = app.add_subcommand("validate", "Check a sequence file against the scanner limits");
  validate->add_option("file", file, "Sequence JSON")->required();

  auto *plot = app.add_subcommand("plot", "Write the sequence diagram series as JSON");
  plot->add_option("file", file, "Sequence JSON")->required();
  plot->add_option("-o,--output", out, "Output JSON")->required();
  plot->add_option("--dt", plot_dt, "Sample spacing, s")->check(CLI::PositiveNumber);

  auto *simc = app.add_subcommand("sim", "Simulate and reconstruct");
  simc->add_option("file", sim.file, "Sequence JSON")->required();
  simc->add_option("--phantom", sim.phantom, "Built-in name or MRPH file")->required();
  simc->add_option("-o,--output", sim.out, "Result file")->required();
  simc->add_option("--dt-rf", sim.dt_rf, "Time step during RF, s")->check(CLI::PositiveNumber);
  simc->add_option("--dt-grad", sim.dt_grad, "Time step cap outside RF, s")->check(CLI::PositiveNumber);
  simc->add_option("--threads", sim.threads, "Worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
  simc->add_flag("--seed-check", sim.seed_check, "Rerun single-threaded and compare bytes");

  auto *examples = app.add_subcommand("examples", "Bundled example sequences");
  examples->require_subcommand(1);
  auto *exp = examples->add_subcommand("export", "Write the examples as JSON files");
  exp->add_option("dir", dir, "Target directory")->required();

  try {
    app.parse(argc, argv);
  } catch (CLI::ParseError const &e) {
    int const rc = app.exit(e);
    return rc == 0 ? ok : input;
  }

  try {
    if (*validate) { return cmd_validate(file); }
    if (*plot) { return cmd_plot(file, out, plot_dt); }
    if (*simc) { return cmd_sim(sim); }
    if (*exp) { return cmd_export(dir); }
  } catch (InvalidSequence const &e) {
    print_violations(e.violations());
    return domain;
  } catch (SchemaError const &e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return input;
  } catch (phantom::TruncatedPayload const &e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return input;
  } catch (InputError const &e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return input;
  } catch (Error const &e) {
    fmt::print(stderr, "error: {}{}\n", e.path().empty() ? "" : e.path() + ": ", e.what());
    return domain;
  } catch (std::exception const &e) {
    fmt::print(stderr, "internal error: {}\n", e.what());
    return internal;
  }
  return internal;
}
