#pragma once

// Checkpoint directory layout:
//   manifest    JSON: format tag, model config, ordered {name, shape} list
//   params.bin  every parameter in manifest order, row-major float32 LE
//   vocab       word vocabulary, one token per line in id order

#include <filesystem>

#include "ddi/features.hpp"
#include "ddi/model.hpp"

namespace ddi {

template <typename Real>
struct Checkpoint {
    ModelConfig config;
    ModelParams<Real> params;
    Vocabulary vocab;
};

/// Each file is written to a temporary name and renamed into place.
template <typename Real>
void save_checkpoint(const std::filesystem::path& dir, const ModelConfig& cfg,
                     ModelParams<Real>& params, const Vocabulary& vocab);

template <typename Real>
Checkpoint<Real> load_checkpoint(const std::filesystem::path& dir);

/// Writes `contents` to path via a sibling temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace ddi
