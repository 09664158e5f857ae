#include "mrseq/pipeline.hpp"

#include <sodium.h>

#include <fmt/format.h>
#include <json.hpp>

namespace mrseq {

InvalidSequence::InvalidSequence(std::vector<seq::Violation> v)
  : Error(v.empty() ? "invalid sequence" : fmt::format("{} violation(s); first: {}: {}", v.size(), v[0].path, v[0].message),
          v.empty() ? "" : v[0].path)
  , violations_(std::move(v))
{
}

std::string sequence_hash(seq::SequenceDoc const &doc)
{
  [[maybe_unused]] static int const ready = sodium_init();
  std::string const                  bytes = seq::save_sequence(doc);
  unsigned char                      out[32];
  crypto_generichash(out, sizeof out, reinterpret_cast<unsigned char const *>(bytes.data()), bytes.size(), nullptr, 0);
  std::string hex(64, '0');
  sodium_bin2hex(hex.data(), hex.size() + 1, out, sizeof out);
  return hex;
}

PipelineResult run_pipeline(seq::SequenceDoc const &doc, phantom::Phantom const &ph, bloch::SimConfig const &cfg,
                            bloch::RunControl const &control)
{
  if (auto v = seq::validate(doc); !v.empty()) { throw InvalidSequence(std::move(v)); }
  seq::EventTimeline const tl = seq::flatten(doc);

  PipelineResult out;
  out.raw = bloch::simulate(tl, ph, doc.scanner, cfg, control);
  out.kspace = recon::sort_kspace(out.raw, recon::readout_fov(tl));
  out.image = recon::reconstruct(out.kspace);

  // Thread count is deliberately absent: it never changes the numbers.
  nlohmann::ordered_json prov;
  prov["sequence_blake2b"] = sequence_hash(doc);
  prov["phantom"] = ph.name;
  prov["n_spins"] = ph.spins.size();
  prov["config"] = {{"dt_rf", cfg.dt_rf}, {"dt_grad", cfg.dt_grad}, {"kernel", bloch::to_string(bloch::resolve_kernel(cfg.kernel))}};
  out.bytes = recon::save_result(out.kspace, out.image, prov.dump());
  return out;
}

} // namespace mrseq
