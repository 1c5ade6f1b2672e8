#pragma once

#include <string>
#include <vector>

#include "glyphdiff/config.hpp"
#include "glyphdiff/core/nn.hpp"
#include "glyphdiff/core/serialize.hpp"
#include "glyphdiff/font/stroke_font.hpp"
#include "glyphdiff/render/render.hpp"

namespace gd::ocr {

// Penultimate activations plus the pooled pre-logit feature.
struct OCRFeatures {
  Tensor<float> feature_map;  // [C', h', w']
  Tensor<float> pooled;       // [C']
};

// Convolutional recognizer graph: stride-2 conv stages ending in a per-slot
// classifier (the input width divides evenly into max_slots column bins).
// Templated on scalar so gradient checks can run the same graph in double.
template <typename S>
struct RecognizerNet {
  std::vector<Conv2d<S>> convs;
  Linear<S> head;  // slot feature -> |alphabet|+1 logits (blank last)
  RecognizerConfig cfg;

  static RecognizerNet build(ParamStore<S>& ps, const RecognizerConfig& cfg, Rng& init);

  // x: [N,1,H,W] in [-1,1] -> penultimate feature map [N,C',h',w'].
  Var<S> backbone(Tape<S>& t, Var<S> x) const;
  Var<S> pooled(Tape<S>& t, Var<S> feature_map) const;       // [N,C']
  Var<S> slot_logits(Tape<S>& t, Var<S> feature_map) const;  // [N*slots, K+1]
};

struct PretrainReport {
  double holdout_accuracy = 0;
  double final_loss = 0;
  std::vector<double> loss_curve;  // sampled every log interval
  int steps = 0;
};

// A pretrained, frozen recognizer.
class Recognizer {
 public:
  RecognizerConfig cfg;
  ParamStore<float> params;
  RecognizerNet<float> net;

  // Trains on strings rendered через render_text_line with rotation/scale/
  // noise/gray-level augmentations; aborts if the held-out sequence accuracy
  // ends below cfg.abort_below.
  static Recognizer pretrain(const RecognizerConfig& cfg, const StrokeFont& font,
                             PretrainReport* report = nullptr);

  // Greedy per-slot decode: argmax per slot, blanks stripped.
  std::string recognize(const Image& line_image) const;
  std::vector<std::string> recognize_batch(const std::vector<Image>& line_images) const;

  OCRFeatures extract_features(const Image& line_image) const;

  // Pooled backbone feature of an arbitrary RGB image (used as the benchmark
  // FID feature extractor).
  Tensor<float> image_feature(const Image& rgb) const;

  int pooled_dim() const { return cfg.widths.back(); }

  uint64_t weight_checksum() const;

  void save(const std::string& path, const std::string& config_hash) const;
  static Recognizer load(const std::string& path);
  static Recognizer from_checkpoint(const Checkpoint& ck, const std::string& prefix);
  void add_to_checkpoint(Checkpoint& ck, const std::string& prefix) const;

  // Converts an ink-mask glyph line image ([0,1]) to recognizer input range.
  static Image glyph_to_input(const Tensor<float>& glyph_line);

 private:
  Recognizer() = default;
  void rebuild();
};

// Synthetic pretraining sample: augmented rendering of `text` plus per-slot
// targets aligned to the augmented character positions.
struct TrainLine {
  Image image;  // [1,H,W] in [-1,1]
  std::string text;
  std::vector<int> slot_targets;  // length max_slots, blank = |alphabet|
};

TrainLine make_train_line(const RecognizerConfig& cfg, const StrokeFont& font, Rng& rng,
                          bool augment);

uint64_t params_checksum(const ParamStore<float>& ps);

}  // namespace gd::ocr
