#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cine/encoding.hpp"
#include "cine/io.hpp"

namespace cine {

enum class MaskPattern { Uniform, Gaussian, Full };

std::string to_string(MaskPattern p);
MaskPattern parse_mask_pattern(const std::string& s);

struct MaskSpec {
  MaskPattern pattern = MaskPattern::Uniform;
  std::size_t acceleration = 4;
  std::size_t center_lines = 4;
};

// Mask for `nt` frames following `spec`. `seed` only matters for Gaussian draws.
SamplingMask make_mask(const MaskSpec& spec, std::size_t ny, std::size_t nt, std::uint64_t seed);

// Count-normalized temporal average: out[c,ky,kx] = sum_t m[c,t,ky,kx] / count(ky).
// Throws CoverageError naming every never-sampled line.
MultiCoilKSpace merge_frames(const MultiCoilKSpace& m, const SamplingMask& mask);

struct TrainingPair {
  MultiCoilKSpace input;         // [nc, 1, ny, nx], retrospectively undersampled
  ComplexTensor<double> target;  // [ny, nx], coil-combined fully encoded image
  SamplingMask mask;             // ny x 1
};

struct Dataset {
  std::vector<TrainingPair> pairs;
  KeyValues manifest;
};

// Draw i uses a retro mask seeded with seed + i (uniform draws use lattice offset i).
Dataset build_training_pairs(const MultiCoilKSpace& full, const CoilSensitivities& csm, const MaskSpec& retro,
                             std::size_t n_draws, std::uint64_t seed);

// Axis-aligned crops of size `patch` (x, y, t) on the `stride` lattice, scanned t-major, then y, then x.
std::vector<CineVolume> shear_augment(const CineVolume& volume, const std::array<std::size_t, 3>& patch,
                                      const std::array<std::size_t, 3>& stride);

// Directory layout: manifest.txt plus pair_<i>_{input,target,mask}.tns.
void save_dataset(const std::filesystem::path& dir, const Dataset& dataset);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace cine
