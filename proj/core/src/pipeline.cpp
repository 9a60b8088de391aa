#include "cine/pipeline.hpp"

#include <string>

namespace cine {

std::string to_string(MaskPattern p) {
  switch (p) {
    case MaskPattern::Uniform: return "uniform";
    case MaskPattern::Gaussian: return "gaussian";
    case MaskPattern::Full: return "full";
  }
  return "unknown";
}

MaskPattern parse_mask_pattern(const std::string& s) {
  if (s == "uniform") return MaskPattern::Uniform;
  if (s == "gaussian") return MaskPattern::Gaussian;
  if (s == "full") return MaskPattern::Full;
  throw ConfigError("unknown mask pattern '" + s + "' (expected uniform, gaussian or full)");
}

SamplingMask make_mask(const MaskSpec& spec, std::size_t ny, std::size_t nt, std::uint64_t seed) {
  switch (spec.pattern) {
    case MaskPattern::Uniform: return make_uniform_interleaved_mask(spec.acceleration, ny, nt, spec.center_lines);
    case MaskPattern::Gaussian:
      return make_gaussian_random_mask(spec.acceleration, ny, nt, spec.center_lines, seed);
    case MaskPattern::Full: return make_full_mask(ny, nt);
  }
  throw ConfigError("invalid mask pattern");
}

MultiCoilKSpace merge_frames(const MultiCoilKSpace& m, const SamplingMask& mask) {
  if (m.shape().size() != 4) throw DimensionError("merge_frames expects [nc, nt, ny, nx], got " + shape_string(m.shape()));
  const std::size_t nc = m.shape()[0], nt = m.shape()[1], ny = m.shape()[2], nx = m.shape()[3];
  if (mask.nt() != nt || mask.ny() != ny) throw DimensionError("merge_frames: mask extents do not match k-space");
  const std::vector<std::size_t> missing = mask.uncovered_lines();
  if (!missing.empty()) {
    std::string lines;
    for (std::size_t l : missing) lines += (lines.empty() ? "" : ",") + std::to_string(l);
    throw CoverageError("incomplete k-space coverage: " + std::to_string(missing.size()) +
                        " phase-encode line(s) never sampled: " + lines);
  }
  const std::size_t plane = ny * nx;
  MultiCoilKSpace out({nc, 1, ny, nx});
  for (std::size_t c = 0; c < nc; ++c) {
    for (std::size_t t = 0; t < nt; ++t) {
      const std::size_t off = (c * nt + t) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        out.real[c * plane + i] += m.real[off + i];
        out.imag[c * plane + i] += m.imag[off + i];
      }
    }
    for (std::size_t l = 0; l < ny; ++l) {
      const double inv = 1.0 / static_cast<double>(mask.count(l));
      const std::size_t row = c * plane + mask.fft_row(l) * nx;
      for (std::size_t x = 0; x < nx; ++x) {
        out.real[row + x] *= inv;
        out.imag[row + x] *= inv;
      }
    }
  }
  return out;
}

Dataset build_training_pairs(const MultiCoilKSpace& full, const CoilSensitivities& csm, const MaskSpec& retro,
                             std::size_t n_draws, std::uint64_t seed) {
  if (full.shape().size() != 4 || full.shape()[1] != 1) {
    throw DimensionError("build_training_pairs expects merged k-space [nc, 1, ny, nx], got " +
                         shape_string(full.shape()));
  }
  const std::size_t ny = full.shape()[2];
  const EncodingConfig full_cfg{make_full_mask(ny, 1), csm};
  const ComplexTensor<double> target_volume = adjoint_encode(full, full_cfg);
  const ComplexTensor<double> target(target_volume.real.reshaped({ny, full.shape()[3]}),
                                     target_volume.imag.reshaped({ny, full.shape()[3]}));

  // Uniform retro masks cycle through the lattice offsets.
  SamplingMask uniform_all;
  if (retro.pattern == MaskPattern::Uniform) uniform_all = make_mask(retro, ny, n_draws, seed);

  Dataset ds;
  for (std::size_t i = 0; i < n_draws; ++i) {
    SamplingMask mask = retro.pattern == MaskPattern::Uniform ? uniform_all.frame(i)
                                                              : make_mask(retro, ny, 1, seed + i);
    ds.pairs.push_back(TrainingPair{apply_mask(full, mask), target, std::move(mask)});
  }
  ds.manifest.set("retro.pattern", to_string(retro.pattern));
  ds.manifest.set("retro.R", std::to_string(retro.acceleration));
  ds.manifest.set("retro.center_lines", std::to_string(retro.center_lines));
  ds.manifest.set("retro.seed", std::to_string(seed));
  ds.manifest.set("pairs", std::to_string(n_draws));
  return ds;
}

std::vector<CineVolume> shear_augment(const CineVolume& volume, const std::array<std::size_t, 3>& patch,
                                      const std::array<std::size_t, 3>& stride) {
  if (volume.shape().size() != 3) throw DimensionError("shear_augment expects [nt, ny, nx]");
  const std::size_t nt = volume.shape()[0], ny = volume.shape()[1], nx = volume.shape()[2];
  const auto [px, py, pt] = patch;
  const auto [sx, sy, st] = stride;
  if (px == 0 || py == 0 || pt == 0 || px > nx || py > ny || pt > nt) {
    throw ConfigError("patch " + std::to_string(px) + "x" + std::to_string(py) + "x" + std::to_string(pt) +
                      " does not fit volume " + std::to_string(nx) + "x" + std::to_string(ny) + "x" +
                      std::to_string(nt));
  }
  if (sx == 0 || sy == 0 || st == 0) throw ConfigError("shear stride must be positive");
  std::vector<CineVolume> out;
  for (std::size_t t0 = 0; t0 + pt <= nt; t0 += st) {
    for (std::size_t y0 = 0; y0 + py <= ny; y0 += sy) {
      for (std::size_t x0 = 0; x0 + px <= nx; x0 += sx) {
        CineVolume crop({pt, py, px});
        for (std::size_t t = 0; t < pt; ++t) {
          for (std::size_t y = 0; y < py; ++y) {
            for (std::size_t x = 0; x < px; ++x) {
              crop.real.at(t, y, x) = volume.real.at(t0 + t, y0 + y, x0 + x);
              crop.imag.at(t, y, x) = volume.imag.at(t0 + t, y0 + y, x0 + x);
            }
          }
        }
        out.push_back(std::move(crop));
      }
    }
  }
  return out;
}

namespace {
std::filesystem::path pair_file(const std::filesystem::path& dir, std::size_t i, const char* what) {
  return dir / ("pair_" + std::to_string(i) + "_" + what + ".tns");
}
}  // namespace

void save_dataset(const std::filesystem::path& dir, const Dataset& dataset) {
  std::filesystem::create_directories(dir);
  KeyValues manifest = dataset.manifest;
  manifest.set("pairs", std::to_string(dataset.pairs.size()));
  if (!dataset.pairs.empty()) {
    manifest.set("retro.center_lines", std::to_string(dataset.pairs.front().mask.center_lines()));
    manifest.set("retro.R", std::to_string(dataset.pairs.front().mask.acceleration()));
  }
  write_key_values(dir / "manifest.txt", manifest);
  for (std::size_t i = 0; i < dataset.pairs.size(); ++i) {
    const TrainingPair& p = dataset.pairs[i];
    write_tns_complex(pair_file(dir, i, "input"), p.input);
    write_tns_complex(pair_file(dir, i, "target"), p.target);
    write_tns(pair_file(dir, i, "mask"), p.mask.as_tensor());
  }
}

Dataset load_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir / "manifest.txt")) throw IoError("no dataset manifest in " + dir.string());
  Dataset ds;
  ds.manifest = read_key_values(dir / "manifest.txt");
  const std::size_t n = std::stoul(ds.manifest.get("pairs"));
  const std::size_t center = std::stoul(ds.manifest.get_or("retro.center_lines", "0"));
  const std::size_t accel = std::stoul(ds.manifest.get_or("retro.R", "1"));
  for (std::size_t i = 0; i < n; ++i) {
    TrainingPair p;
    p.input = read_tns_complex<double>(pair_file(dir, i, "input"));
    p.target = read_tns_complex<double>(pair_file(dir, i, "target"));
    p.mask = SamplingMask::from_tensor(read_tns<std::uint8_t>(pair_file(dir, i, "mask")), center, accel);
    ds.pairs.push_back(std::move(p));
  }
  return ds;
}

}  // namespace cine
