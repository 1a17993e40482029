#pragma once

#include <string>
#include <utility>

#include "adinkra/cnn/model.hpp"
#include "adinkra/cnn/train.hpp"
#include "adinkra/core/error.hpp"

namespace adinkra::cnn {

// Checkpoint files carry magic "ADNK", a little-endian u16 format
// version, the architecture spec + seed + training history, the
// parameters in declaration order as raw little-endian 32-bit floats, and
// a trailing CRC32 of the parameter payload. Loading failures are typed:
// unsupported version, short file, corrupted payload.
using adinkra::ChecksumError;
using adinkra::TruncationError;
using adinkra::VersionError;

inline constexpr std::uint16_t kCheckpointVersion = 1;

// (declared in train.hpp as well, for use inside the training loop)
template <typename T>
void save_checkpoint(const ModelState<T>& model, const TrainHistory& history,
                     const std::string& path);

template <typename T>
std::pair<ModelState<T>, TrainHistory> load_checkpoint(
    const std::string& path);

extern template void save_checkpoint<float>(const ModelState<float>&,
                                            const TrainHistory&,
                                            const std::string&);
extern template void save_checkpoint<double>(const ModelState<double>&,
                                             const TrainHistory&,
                                             const std::string&);
extern template std::pair<ModelState<float>, TrainHistory>
load_checkpoint<float>(const std::string&);
extern template std::pair<ModelState<double>, TrainHistory>
load_checkpoint<double>(const std::string&);

}  // namespace adinkra::cnn
