#pragma once

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

#include "glyphdiff/config.hpp"
#include "glyphdiff/core/geometry.hpp"
#include "glyphdiff/core/image.hpp"
#include "glyphdiff/core/rng.hpp"
#include "glyphdiff/font/stroke_font.hpp"

namespace gd::corpus {

struct TextLine {
  std::string text;
  Polygon polygon;  // >= 4 points, pixel coordinates
  double score = 1.0;
  bool valid = true;
};

struct Sample {
  Image image;  // [3,H,W] in [-1,1]; may be empty when metadata-only
  std::string img_path;
  std::string caption;  // contains one "*" placeholder per valid line
  std::vector<TextLine> lines;
  double wm_score = 0.0;
};

// As-ingested annotation record, before filtering.
struct RawRecord {
  double width = 0;
  double height = 0;
  std::vector<TextLine> lines;
};

struct FilterDecision {
  bool keep = true;
  std::vector<std::string> reasons;  // failed image-level rules; empty iff keep
  std::vector<bool> line_valid;      // per-line rule outcomes (record may still be kept)
  std::vector<std::vector<std::string>> line_reasons;
};

// Image-level rules (in order): bad_polygon, min_side, aspect_ratio,
// text_area, max_lines. Line-level rules mark lines invalid without
// rejecting the record: line_height, line_score, line_text.
FilterDecision filter_record(const RawRecord& r, const FilterConfig& cfg);

// The ten connector statements appended between caption and placeholders.
extern const std::array<std::string, 10> kConnectors;

// Strips any pre-existing "*" from the caption, appends one randomly chosen
// connector and n_lines comma-separated placeholders. n_lines = 0 returns the
// caption unchanged.
std::string apply_caption_template(const std::string& base_caption, int n_lines, Rng& rng);

int count_placeholders(const std::string& caption);

// Deterministic synthetic corpus; sample i depends only on (seed, i).
std::vector<Sample> generate_corpus(const CorpusConfig& cfg, uint64_t seed);

// One synthetic sample (exposed for parallel generation).
Sample generate_sample(const CorpusConfig& cfg, const StrokeFont& font, uint64_t seed,
                       int index);

struct StatsReport {
  int64_t image_count = 0;
  int64_t images_without_text = 0;
  int64_t line_count = 0;
  double mean_lines_per_image = 0;
  double frac_images_le5_lines = 0;
  int64_t char_count = 0;
  int64_t unique_chars = 0;
  double mean_chars_per_line = 0;
  double frac_lines_le20_chars = 0;

  nlohmann::json to_json() const;
};

StatsReport dataset_stats(const std::vector<Sample>& samples);

// JSON-lines persistence: <name>.jsonl plus PNGs under <dir>/imgs/.
void save_dataset(const std::string& dir, const std::string& name,
                  const std::vector<Sample>& samples);
std::vector<Sample> load_dataset(const std::string& jsonl_path, bool load_images);

}  // namespace gd::corpus
