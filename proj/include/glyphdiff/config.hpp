#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace gd {

// All tunables live here; the effective config is hashed and the hash is
// embedded in checkpoints and reports so artifacts can be chained back to
// their configuration. Unknown keys in config files are rejected.

struct CorpusConfig {
  std::string alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZ";
  int image_size = 64;
  std::vector<double> line_count_probs = {0.6, 0.4};  // P(1 line), P(2 lines), ...
  int min_chars = 1;
  int max_chars = 6;
  std::string font = "builtin:sans";
  int count = 20000;
  int eval_count = 200;
  double rotated_prob = 0.15;
  double max_rotation_deg = 15.0;
  double min_contrast = 0.3;  // in [-1,1] units
};

struct FilterConfig {
  double min_side = 256;
  double aspect_min = 0.67;
  double aspect_max = 1.5;
  double min_text_area_frac = 0.10;
  int max_lines = 8;
  double min_text_height = 30;
  double min_ocr_score = 0.7;
  std::string area_mode = "polygon";  // or "bbox"

  // Linear scaling of the pixel thresholds for toy image sizes
  // (64x64: min_side 48, text height 8).
  static FilterConfig scaled_for(int image_size);
};

struct RenderConfig {
  int glyph_scale = 2;  // glyph image rendered at 2x the pipeline resolution
  int line_h = 32;      // single-line canvas (e_g / p_g), paper-scale 80x512
  int line_w = 128;
};

struct RecognizerConfig {
  std::string alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZ";
  int max_slots = 8;
  int input_h = 32;
  int input_w = 128;
  std::vector<int> widths = {16, 32, 64, 96};  // conv channel ramp
  int steps = 4000;
  int batch = 32;
  double lr = 1e-3;
  uint64_t seed = 1;
  int holdout = 2000;
  int max_train_chars = 6;
  double accuracy_gate = 0.99;
  double abort_below = 0.95;
};

struct TextEncConfig {
  int d_model = 96;
  int n_layers = 2;
  int n_heads = 4;
  int max_seq_len = 40;
};

struct AuxLatentConfig {
  int latent_channels = 4;
  std::vector<int> vae_channels = {32, 64, 64};
  double kl_weight = 1e-6;
  int vae_steps = 4000;
  int vae_batch = 16;
  double vae_lr = 1e-3;
  uint64_t vae_seed = 2;
  double psnr_gate = 28.0;
  std::vector<int> glyph_channels = {16, 32, 64};
  std::vector<int> position_channels = {16, 32};
};

struct DiffusionConfig {
  int timesteps = 1000;
  double beta_start = 1e-4;
  double beta_end = 2e-2;
  std::vector<int> unet_channels = {64, 128, 256};
  int res_blocks = 2;
  int attn_from_level = 1;  // self+cross attention at this level and below
  int heads = 4;
  int time_dim = 128;
  int base_epochs = 3;
  int base_batch = 8;
  double base_lr = 2e-4;
  uint64_t base_seed = 3;
};

struct TrainPhase {
  int epochs = 0;
  bool editing = false;
  bool perceptual = false;
};

struct TrainerConfig {
  double lambda_tp = 0.01;
  double sigma = 0.5;
  double lr = 2e-5;
  double cond_dropout = 0.1;
  double wm_threshold = 0.5;
  int batch = 8;
  int max_lines = 5;
  int max_chars = 20;
  std::vector<TrainPhase> phases = {{5, false, false}, {3, true, false}, {2, true, true}};
  uint64_t seed = 4;
  bool use_glyph_embedding = true;  // ablation switch (off = captions only)
  bool use_position = true;
  int log_every = 10;
};

struct BenchConfig {
  int steps = 20;
  double cfg_scale = 9.0;
  uint64_t seed = 100;
  int batch = 4;
  std::string positive_prompt = "best quality, extremely detailed";
  std::string negative_prompt =
      "longbody, lowres, bad anatomy, bad hands, missing fingers, extra digit, fewer digits, "
      "cropped, worst quality, low quality, watermark";
  bool skip_fid = false;
};

struct GlobalConfig {
  CorpusConfig corpus;
  FilterConfig filter;
  RenderConfig render;
  RecognizerConfig ocr_train;
  RecognizerConfig ocr_eval;
  TextEncConfig textenc;
  AuxLatentConfig auxlatent;
  DiffusionConfig diffusion;
  TrainerConfig trainer;
  BenchConfig bench;

  GlobalConfig();

  nlohmann::json to_json() const;
  static GlobalConfig from_json(const nlohmann::json& j);  // strict: unknown keys rejected
  static GlobalConfig load(const std::string& path);
  void save(const std::string& path) const;
  std::string hash() const;
  void validate() const;

  // Reduced presets used by tests and the --smoke pipeline.
  static GlobalConfig small_preset();  // 32x32 images, compact nets
  static GlobalConfig smoke_preset();  // minutes-scale integrity run
};

}  // namespace gd
