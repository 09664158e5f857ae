#pragma once

// Cartesian k-space sorting, image reconstruction and the result file.

#include "mrseq/bloch.hpp"
#include "mrseq/error.hpp"

#include <complex>
#include <string>
#include <vector>

namespace mrseq::recon {

class IncompleteKSpace : public Error
{
public:
  IncompleteKSpace(std::vector<int> missing, std::vector<int> duplicate, std::string const &why = {});
  std::vector<int> const &missing() const noexcept { return missing_; }
  std::vector<int> const &duplicate() const noexcept { return duplicate_; }

private:
  std::vector<int> missing_, duplicate_;
};

// rows = lines (phase encode), cols = samples (read). Row r, column c sit at
// k = ((r - rows/2)·dk, (c - cols/2)·dk) with integer division.
struct KSpace
{
  int                               rows = 0, cols = 0;
  std::vector<std::complex<double>> data;
  double                            fov = 0.0;  // m, 0 when unknown

  std::complex<double> &at(int r, int c) { return data[std::size_t(r) * cols + c]; }
  std::complex<double>  at(int r, int c) const { return data[std::size_t(r) * cols + c]; }
};

// Rows are placed by line tag; reversed lines are flipped unless
// `flip_reversed` is false.
KSpace sort_kspace(bloch::RawAcquisition const &raw, double fov = 0.0, bool flip_reversed = true);

struct ImageResult
{
  int                               rows = 0, cols = 0;
  std::vector<std::complex<double>> image;  // centred; pixel (rows/2, cols/2) is the origin
  std::vector<double>               magnitude;
  std::vector<double>               phase;  // (-π, π]
  double                            fov = 0.0;
};

// Inverse 2D DFT with 1/(rows·cols) scaling and the zero frequency at the
// matrix centre on both sides.
ImageResult reconstruct(KSpace const &k);

// Readout field of view 1/(γ̄·|G|·dwell) of the first ADC event; 0 without gradient.
double readout_fov(seq::EventTimeline const &tl);

// "MRRS" binary: magic, u32 version, u32 header length, JSON header, then
// little-endian float32 k-space (interleaved re, im), magnitude and phase,
// each row-major rows × cols.
struct ResultFile
{
  std::string         header;  // JSON text
  KSpace              kspace;
  std::vector<float>  magnitude, phase;
};

std::string save_result(KSpace const &k, ImageResult const &img, std::string const &provenance_json);
ResultFile  load_result(std::string_view bytes);

} // namespace mrseq::recon
