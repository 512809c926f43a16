#pragma once

#include <filesystem>
#include <string>

#include "mmlab/brownian.hpp"
#include "mmlab/heat.hpp"
#include "mmlab/space.hpp"

namespace mmlab {

/// Space files: structured text with fields n, meta (K, N_dim, D, label), the strict
/// lower triangle of the distance matrix (row-major, 17 significant digits) and the
/// weight vector. The reader re-validates every space invariant and reports failures
/// as "<file>:<line>: <message>".
void write_space(const FiniteMMSpace& space, const std::filesystem::path& path);
FiniteMMSpace read_space(const std::filesystem::path& path);

/// Coupling files: marginals plus the joint matrix, in the same structured text
/// idiom as space files.
void write_coupling(const Coupling& coupling, const std::filesystem::path& path);
Coupling read_coupling(const std::filesystem::path& path);

/// Ensemble files: header (seed, grid, model hash, M, start) plus the index matrix.
/// Reading requires the generating model so provenance can be checked against the
/// stored hash.
void write_ensemble(const PathEnsemble& ensemble, const std::filesystem::path& path);
PathEnsemble read_ensemble(const std::filesystem::path& path,
                           std::shared_ptr<const SpectralHeatModel> model);

/// Spectra cache: binary eigendecomposition keyed by the space hash; the loader
/// refuses a file whose hash does not match the space it is asked to animate.
void write_spectra(const SpectralHeatModel& model, const std::filesystem::path& path);
SpectralHeatModel read_spectra(const std::filesystem::path& path,
                               std::shared_ptr<const FiniteMMSpace> space);

/// Writes content to a temp file in the target directory and renames it into place,
/// so a crashed run never leaves a partial file.
void atomic_write_text(const std::filesystem::path& path, const std::string& content);

}  // namespace mmlab
