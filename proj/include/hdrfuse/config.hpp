#pragma once

#include <filesystem>
#include <string>

#include "hdrfuse/loss.hpp"
#include "hdrfuse/trainer.hpp"

namespace hdr {

struct RunConfig {
  TrainConfig train;
  LossConfig loss;
};

/// Flat `key = value` text; '#' starts a comment. Keys are the field names of
/// TrainConfig and LossConfig (gamma_kind, window_size, window_stride,
/// sigma_e, gamma_floor, patch_size, patch_stride, batch_size, lr0, lr_decay,
/// epochs, seed, width_multiplier, max_iterations, deterministic). Unknown
/// keys are rejected.
RunConfig parse_config(const std::string& text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

}  // namespace hdr
