#include "mrseq/binary.hpp"
#include "mrseq/constants.hpp"
#include "mrseq/recon.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include <fftw3.h>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <json.hpp>

namespace mrseq::recon {

namespace {

constexpr char          kMagic[] = "MRRS";
constexpr std::uint32_t kVersion = 1;

// The FFTW planner is not re-entrant.
std::mutex g_planner;

} // namespace

IncompleteKSpace::IncompleteKSpace(std::vector<int> missing, std::vector<int> duplicate, std::string const &why)
  : Error(why.empty() ? fmt::format("incomplete k-space: missing lines [{}], duplicate lines [{}]", fmt::join(missing, ", "),
                                    fmt::join(duplicate, ", "))
                      : "incomplete k-space: " + why)
  , missing_(std::move(missing))
  , duplicate_(std::move(duplicate))
{
}

KSpace sort_kspace(bloch::RawAcquisition const &raw, double fov, bool flip_reversed)
{
  int const n = raw.layout.n_lines;
  int const m = raw.layout.samples_per_line;
  if (n == 0) { throw IncompleteKSpace({}, {}, "no ADC lines"); }
  if (m == 0) { throw IncompleteKSpace({}, {}, "ADC events differ in sample count"); }
  if (raw.samples.size() != std::size_t(n) * m) { throw IncompleteKSpace({}, {}, "sample count does not match layout"); }

  std::vector<int> count(std::size_t(n), 0);
  std::vector<int> duplicate, missing;
  for (int tag : raw.line_tags) {
    if (tag < 0 || tag >= n) { throw IncompleteKSpace({}, {tag}, fmt::format("line tag {} outside [0, {})", tag, n)); }
    if (++count[std::size_t(tag)] == 2) { duplicate.push_back(tag); }
  }
  for (int r = 0; r < n; ++r) {
    if (count[std::size_t(r)] == 0) { missing.push_back(r); }
  }
  if (!missing.empty() || !duplicate.empty()) {
    std::sort(duplicate.begin(), duplicate.end());
    throw IncompleteKSpace(std::move(missing), std::move(duplicate));
  }

  KSpace k;
  k.rows = n;
  k.cols = m;
  k.fov = fov;
  k.data.resize(std::size_t(n) * m);
  for (int line = 0; line < n; ++line) {
    int const  row = raw.line_tags[std::size_t(line)];
    bool const flip = flip_reversed && raw.layout.reversed[std::size_t(line)];
    for (int c = 0; c < m; ++c) {
      k.at(row, flip ? m - 1 - c : c) = raw.samples[std::size_t(line) * m + c];
    }
  }
  return k;
}

ImageResult reconstruct(KSpace const &k)
{
  int const   n = k.rows, m = k.cols;
  std::size_t total = std::size_t(n) * m;
  auto       *buf = static_cast<fftw_complex *>(fftw_malloc(sizeof(fftw_complex) * total));
  if (!buf) { throw std::bad_alloc(); }
  auto wrap = [](int i, int len) { return ((i - len / 2) % len + len) % len; };

  fftw_plan plan;
  {
    std::scoped_lock lock(g_planner);
    plan = fftw_plan_dft_2d(n, m, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < m; ++c) {
      auto const   v = k.at(r, c);
      std::size_t const i = std::size_t(wrap(r, n)) * m + wrap(c, m);
      buf[i][0] = v.real();
      buf[i][1] = v.imag();
    }
  }
  fftw_execute(plan);
  {
    std::scoped_lock lock(g_planner);
    fftw_destroy_plan(plan);
  }

  ImageResult img;
  img.rows = n;
  img.cols = m;
  img.fov = k.fov;
  img.image.resize(total);
  img.magnitude.resize(total);
  img.phase.resize(total);
  double const scale = 1.0 / static_cast<double>(total);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < m; ++c) {
      std::size_t const src = std::size_t(wrap(r, n)) * m + wrap(c, m);
      std::size_t const dst = std::size_t(r) * m + c;
      std::complex<double> const z(buf[src][0] * scale, buf[src][1] * scale);
      img.image[dst] = z;
      img.magnitude[dst] = std::abs(z);
      double ph = std::arg(z);
      if (ph <= -kPi) { ph = kPi; }
      img.phase[dst] = ph;
    }
  }
  fftw_free(buf);
  return img;
}

double readout_fov(seq::EventTimeline const &tl)
{
  for (auto const &e : tl.events) {
    if (!e.adc) { continue; }
    double const g = std::sqrt(e.g0[0] * e.g0[0] + e.g0[1] * e.g0[1] + e.g0[2] * e.g0[2]);
    double const dwell = e.duration() / e.adc->n_samples;
    if (g == 0.0 || dwell <= 0.0) { return 0.0; }
    return 1.0 / (kGammaBar * g * dwell);
  }
  return 0.0;
}

std::string save_result(KSpace const &k, ImageResult const &img, std::string const &provenance_json)
{
  nlohmann::ordered_json h;
  h["rows"] = k.rows;
  h["cols"] = k.cols;
  h["fov"] = k.fov;
  h["arrays"] = {"kspace", "magnitude", "phase"};
  h["provenance"] = nlohmann::ordered_json::parse(provenance_json.empty() ? "{}" : provenance_json);
  std::string out = binary::frame(kMagic, kVersion, h.dump());
  out.reserve(out.size() + 16 * k.data.size());
  for (auto const &z : k.data) {
    binary::put_f32(out, static_cast<float>(z.real()));
    binary::put_f32(out, static_cast<float>(z.imag()));
  }
  for (double v : img.magnitude) { binary::put_f32(out, static_cast<float>(v)); }
  for (double v : img.phase) { binary::put_f32(out, static_cast<float>(v)); }
  return out;
}

ResultFile load_result(std::string_view bytes)
{
  binary::Frame const f = binary::unframe(bytes, kMagic);
  if (f.version != kVersion) { throw SchemaError(".version", fmt::format("unsupported result version {}", f.version)); }
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(f.header.begin(), f.header.end());
  } catch (nlohmann::json::parse_error const &e) {
    throw SchemaError("", fmt::format("invalid header JSON: {}", e.what()));
  }
  if (!h.contains("rows") || !h["rows"].is_number_unsigned() || !h.contains("cols") || !h["cols"].is_number_unsigned()) {
    throw SchemaError(".rows", "rows and cols must be non-negative integers");
  }
  ResultFile r;
  r.header = std::string(f.header);
  r.kspace.rows = h["rows"].get<int>();
  r.kspace.cols = h["cols"].get<int>();
  r.kspace.fov = h.value("fov", 0.0);
  std::size_t const total = std::size_t(r.kspace.rows) * r.kspace.cols;
  if (f.payload.size() != 16 * total) {
    throw phantom::TruncatedPayload(fmt::format("payload is {} bytes, header implies {}", f.payload.size(), 16 * total));
  }
  std::size_t at = 0;
  r.kspace.data.resize(total);
  for (auto &z : r.kspace.data) {
    z = {binary::get_f32(f.payload, at), binary::get_f32(f.payload, at + 4)};
    at += 8;
  }
  for (auto *v : {&r.magnitude, &r.phase}) {
    v->resize(total);
    for (float &x : *v) {
      x = binary::get_f32(f.payload, at);
      at += 4;
    }
  }
  return r;
}

} // namespace mrseq::recon
