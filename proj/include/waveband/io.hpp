#pragma once

// Text file formats.
//
// Potential:  header `# n=<n> h=<h> Xmax=<X_max>`, then one row per sample:
//             x, Re/Im pairs of the n^2 entries in row-major order.
// Operator:   header `# role=<role> N=<N> n=<n> h=<h>`, then one row per
//             matrix row: Re/Im pairs of every column.
// Wave field: header `# x,t,re0,im0,...`, one row per (x, t) sample.
//
// Numbers are written with 17 significant digits so finite values round-trip
// exactly.

#include <filesystem>
#include <optional>
#include <string>

#include "waveband/core.hpp"

namespace waveband::io {

std::string format_double(double v);

void save_potential(const HermitianPotential& q, const std::filesystem::path& path);
HermitianPotential load_potential(const std::filesystem::path& path);

void save_operator(const DiscreteOperator& op, const std::filesystem::path& path);
DiscreteOperator load_operator(const std::filesystem::path& path);

// Writes the whole field, or only the time slice `slice` when given.
void save_wave_field(const WaveField& u, const std::filesystem::path& path,
                     std::optional<int> slice = std::nullopt);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace waveband::io
