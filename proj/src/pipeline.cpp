#include "leafpipe/pipeline.hpp"

#include "leafpipe/features.hpp"
#include "leafpipe/parallel.hpp"

namespace leafpipe {

SegmentedImage segment_file(const std::filesystem::path& path, int side, const AheParams& ahe) {
  return segment_leaf(resize_bilinear(decode_image(path), side, side), ahe);
}

ExperimentInputs prepare_inputs(const DatasetManifest& manifest, const PipelineConfig& config, int jobs,
                                bool with_pixels) {
  struct Item {
    int label;
    std::filesystem::path path;
  };
  std::vector<Item> items;
  for (std::size_t c = 0; c < manifest.classes.size(); ++c)
    for (const auto& p : manifest.samples[c]) items.push_back({static_cast<int>(c), p});

  const int side = config.dicdm_image_size;
  ExperimentInputs in;
  in.class_names = manifest.classes;
  in.image_side = side;
  in.features.names = feature_names();
  in.features.values.resize(static_cast<Eigen::Index>(items.size()), feature_layout::kTotal);
  if (with_pixels) in.pixels.resize(static_cast<Eigen::Index>(items.size()), side * side);

  parallel_for(items.size(), jobs, [&](std::size_t i) {
    const ImageRGB rgb = decode_image(items[i].path);
    const SegmentedImage seg = segment_leaf(resize_bilinear(rgb, config.image_size, config.image_size), config.ahe);
    in.features.values.row(static_cast<Eigen::Index>(i)) = extract_all(seg, config.features).values.transpose();
    if (with_pixels) {
      const Eigen::VectorXd px = side == config.image_size
                                     ? masked_pixels(seg)
                                     : masked_pixels(segment_leaf(resize_bilinear(rgb, side, side), config.ahe));
      in.pixels.row(static_cast<Eigen::Index>(i)) = px.transpose();
    }
  });
  for (const Item& it : items) {
    in.features.labels.push_back(it.label);
    in.features.sample_ids.push_back(std::filesystem::relative(it.path, manifest.root).generic_string());
  }
  return in;
}

}  // namespace leafpipe
