#pragma once

#include "leafpipe/config.hpp"
#include "leafpipe/dataset.hpp"
#include "leafpipe/eval.hpp"
#include "leafpipe/segment.hpp"

#include <filesystem>

namespace leafpipe {

/// Decode, resize to `side` x `side`, segment.
SegmentedImage segment_file(const std::filesystem::path& path, int side, const AheParams& ahe);

/// Per-sample 252-feature rows (sample id "<class>/<file>") and, when
/// `with_pixels`, the flattened segmented image at the direct-pixel resolution.
ExperimentInputs prepare_inputs(const DatasetManifest& manifest, const PipelineConfig& config, int jobs,
                                bool with_pixels = true);

}  // namespace leafpipe
