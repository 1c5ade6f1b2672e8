#include "glyphdiff/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "glyphdiff/core/error.hpp"
#include "glyphdiff/core/serialize.hpp"

namespace gd {

namespace {

using nlohmann::json;

// Strict section reader: every key present in the JSON must be consumed.
class Section {
 public:
  Section(const json& j, std::string name)
      : j_(j), name_(std::move(name)), unwound_(std::uncaught_exceptions()) {
    check(j.is_object(), "config_invalid", "section " + name_ + " must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (j_.contains(key)) {
      try {
        out = j_.at(key).get<T>();
      } catch (const std::exception& e) {
        throw Error("config_invalid", name_ + "." + key + ": " + e.what());
      }
    }
  }

  const json* sub(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > unwound_) return;  // already failing
    for (auto& [k, v] : j_.items())
      check(seen_.count(k) > 0, "config_unknown_key", "unknown key " + name_ + "." + k);
  }

 private:
  const json& j_;
  std::string name_;
  int unwound_;
  std::set<std::string> seen_;
};

json phases_to_json(const std::vector<TrainPhase>& ps) {
  json a = json::array();
  for (const auto& p : ps)
    a.push_back({{"epochs", p.epochs}, {"editing", p.editing}, {"perceptual", p.perceptual}});
  return a;
}

std::vector<TrainPhase> phases_from_json(const json& a) {
  std::vector<TrainPhase> out;
  check(a.is_array(), "config_invalid", "trainer.phases must be an array");
  for (const auto& p : a) {
    Section s(p, "trainer.phases[]");
    TrainPhase ph;
    s.get("epochs", ph.epochs);
    s.get("editing", ph.editing);
    s.get("perceptual", ph.perceptual);
    out.push_back(ph);
  }
  return out;
}

}  // namespace

FilterConfig FilterConfig::scaled_for(int image_size) {
  FilterConfig f;
  if (image_size >= 256) return f;
  // documented toy scaling: 64x64 -> min_side 48, text height 8
  double s = double(image_size) / 256.0;
  f.min_side = std::floor(f.min_side * s * 0.75);  // 64 -> 48
  f.min_text_height = std::ceil(f.min_text_height * s + 0.4);  // 64 -> 8
  return f;
}

GlobalConfig::GlobalConfig() {
  // evaluation recognizer: architecturally distinct width and its own seed
  ocr_eval.widths = {20, 40, 80, 112};
  ocr_eval.seed = 101;
}

json GlobalConfig::to_json() const {
  json j;
  j["corpus"] = {{"alphabet", corpus.alphabet},
                 {"image_size", corpus.image_size},
                 {"line_count_probs", corpus.line_count_probs},
                 {"min_chars", corpus.min_chars},
                 {"max_chars", corpus.max_chars},
                 {"font", corpus.font},
                 {"count", corpus.count},
                 {"eval_count", corpus.eval_count},
                 {"rotated_prob", corpus.rotated_prob},
                 {"max_rotation_deg", corpus.max_rotation_deg},
                 {"min_contrast", corpus.min_contrast}};
  j["filter"] = {{"min_side", filter.min_side},
                 {"aspect_min", filter.aspect_min},
                 {"aspect_max", filter.aspect_max},
                 {"min_text_area_frac", filter.min_text_area_frac},
                 {"max_lines", filter.max_lines},
                 {"min_text_height", filter.min_text_height},
                 {"min_ocr_score", filter.min_ocr_score},
                 {"area_mode", filter.area_mode}};
  j["render"] = {{"glyph_scale", render.glyph_scale},
                 {"line_h", render.line_h},
                 {"line_w", render.line_w}};
  auto rec = [](const RecognizerConfig& r) {
    return json{{"alphabet", r.alphabet},
                {"max_slots", r.max_slots},
                {"input_h", r.input_h},
                {"input_w", r.input_w},
                {"widths", r.widths},
                {"steps", r.steps},
                {"batch", r.batch},
                {"lr", r.lr},
                {"seed", r.seed},
                {"holdout", r.holdout},
                {"max_train_chars", r.max_train_chars},
                {"accuracy_gate", r.accuracy_gate},
                {"abort_below", r.abort_below}};
  };
  j["ocr_train"] = rec(ocr_train);
  j["ocr_eval"] = rec(ocr_eval);
  j["textenc"] = {{"d_model", textenc.d_model},
                  {"n_layers", textenc.n_layers},
                  {"n_heads", textenc.n_heads},
                  {"max_seq_len", textenc.max_seq_len}};
  j["auxlatent"] = {{"latent_channels", auxlatent.latent_channels},
                    {"vae_channels", auxlatent.vae_channels},
                    {"kl_weight", auxlatent.kl_weight},
                    {"vae_steps", auxlatent.vae_steps},
                    {"vae_batch", auxlatent.vae_batch},
                    {"vae_lr", auxlatent.vae_lr},
                    {"vae_seed", auxlatent.vae_seed},
                    {"psnr_gate", auxlatent.psnr_gate},
                    {"glyph_channels", auxlatent.glyph_channels},
                    {"position_channels", auxlatent.position_channels}};
  j["diffusion"] = {{"timesteps", diffusion.timesteps},
                    {"beta_start", diffusion.beta_start},
                    {"beta_end", diffusion.beta_end},
                    {"unet_channels", diffusion.unet_channels},
                    {"res_blocks", diffusion.res_blocks},
                    {"attn_from_level", diffusion.attn_from_level},
                    {"heads", diffusion.heads},
                    {"time_dim", diffusion.time_dim},
                    {"base_epochs", diffusion.base_epochs},
                    {"base_batch", diffusion.base_batch},
                    {"base_lr", diffusion.base_lr},
                    {"base_seed", diffusion.base_seed}};
  j["trainer"] = {{"lambda_tp", trainer.lambda_tp},
                  {"sigma", trainer.sigma},
                  {"lr", trainer.lr},
                  {"cond_dropout", trainer.cond_dropout},
                  {"wm_threshold", trainer.wm_threshold},
                  {"batch", trainer.batch},
                  {"max_lines", trainer.max_lines},
                  {"max_chars", trainer.max_chars},
                  {"phases", phases_to_json(trainer.phases)},
                  {"seed", trainer.seed},
                  {"use_glyph_embedding", trainer.use_glyph_embedding},
                  {"use_position", trainer.use_position},
                  {"log_every", trainer.log_every}};
  j["bench"] = {{"steps", bench.steps},
                {"cfg_scale", bench.cfg_scale},
                {"seed", bench.seed},
                {"batch", bench.batch},
                {"positive_prompt", bench.positive_prompt},
                {"negative_prompt", bench.negative_prompt},
                {"skip_fid", bench.skip_fid}};
  return j;
}

GlobalConfig GlobalConfig::from_json(const json& j) {
  GlobalConfig c;
  check(j.is_object(), "config_invalid", "config root must be an object");
  std::set<std::string> known = {"corpus",  "filter",    "render",    "ocr_train", "ocr_eval",
                                 "textenc", "auxlatent", "diffusion", "trainer",   "bench"};
  for (auto& [k, v] : j.items())
    check(known.count(k) > 0, "config_unknown_key", "unknown section " + k);

  if (j.contains("corpus")) {
    Section s(j["corpus"], "corpus");
    s.get("alphabet", c.corpus.alphabet);
    s.get("image_size", c.corpus.image_size);
    s.get("line_count_probs", c.corpus.line_count_probs);
    s.get("min_chars", c.corpus.min_chars);
    s.get("max_chars", c.corpus.max_chars);
    s.get("font", c.corpus.font);
    s.get("count", c.corpus.count);
    s.get("eval_count", c.corpus.eval_count);
    s.get("rotated_prob", c.corpus.rotated_prob);
    s.get("max_rotation_deg", c.corpus.max_rotation_deg);
    s.get("min_contrast", c.corpus.min_contrast);
  }
  if (j.contains("filter")) {
    Section s(j["filter"], "filter");
    s.get("min_side", c.filter.min_side);
    s.get("aspect_min", c.filter.aspect_min);
    s.get("aspect_max", c.filter.aspect_max);
    s.get("min_text_area_frac", c.filter.min_text_area_frac);
    s.get("max_lines", c.filter.max_lines);
    s.get("min_text_height", c.filter.min_text_height);
    s.get("min_ocr_score", c.filter.min_ocr_score);
    s.get("area_mode", c.filter.area_mode);
  }
  if (j.contains("render")) {
    Section s(j["render"], "render");
    s.get("glyph_scale", c.render.glyph_scale);
    s.get("line_h", c.render.line_h);
    s.get("line_w", c.render.line_w);
  }
  auto read_rec = [&](const char* name, RecognizerConfig& r) {
    if (!j.contains(name)) return;
    Section s(j[name], name);
    s.get("alphabet", r.alphabet);
    s.get("max_slots", r.max_slots);
    s.get("input_h", r.input_h);
    s.get("input_w", r.input_w);
    s.get("widths", r.widths);
    s.get("steps", r.steps);
    s.get("batch", r.batch);
    s.get("lr", r.lr);
    s.get("seed", r.seed);
    s.get("holdout", r.holdout);
    s.get("max_train_chars", r.max_train_chars);
    s.get("accuracy_gate", r.accuracy_gate);
    s.get("abort_below", r.abort_below);
  };
  read_rec("ocr_train", c.ocr_train);
  read_rec("ocr_eval", c.ocr_eval);
  if (j.contains("textenc")) {
    Section s(j["textenc"], "textenc");
    s.get("d_model", c.textenc.d_model);
    s.get("n_layers", c.textenc.n_layers);
    s.get("n_heads", c.textenc.n_heads);
    s.get("max_seq_len", c.textenc.max_seq_len);
  }
  if (j.contains("auxlatent")) {
    Section s(j["auxlatent"], "auxlatent");
    s.get("latent_channels", c.auxlatent.latent_channels);
    s.get("vae_channels", c.auxlatent.vae_channels);
    s.get("kl_weight", c.auxlatent.kl_weight);
    s.get("vae_steps", c.auxlatent.vae_steps);
    s.get("vae_batch", c.auxlatent.vae_batch);
    s.get("vae_lr", c.auxlatent.vae_lr);
    s.get("vae_seed", c.auxlatent.vae_seed);
    s.get("psnr_gate", c.auxlatent.psnr_gate);
    s.get("glyph_channels", c.auxlatent.glyph_channels);
    s.get("position_channels", c.auxlatent.position_channels);
  }
  if (j.contains("diffusion")) {
    Section s(j["diffusion"], "diffusion");
    s.get("timesteps", c.diffusion.timesteps);
    s.get("beta_start", c.diffusion.beta_start);
    s.get("beta_end", c.diffusion.beta_end);
    s.get("unet_channels", c.diffusion.unet_channels);
    s.get("res_blocks", c.diffusion.res_blocks);
    s.get("attn_from_level", c.diffusion.attn_from_level);
    s.get("heads", c.diffusion.heads);
    s.get("time_dim", c.diffusion.time_dim);
    s.get("base_epochs", c.diffusion.base_epochs);
    s.get("base_batch", c.diffusion.base_batch);
    s.get("base_lr", c.diffusion.base_lr);
    s.get("base_seed", c.diffusion.base_seed);
  }
  if (j.contains("trainer")) {
    Section s(j["trainer"], "trainer");
    s.get("lambda_tp", c.trainer.lambda_tp);
    s.get("sigma", c.trainer.sigma);
    s.get("lr", c.trainer.lr);
    s.get("cond_dropout", c.trainer.cond_dropout);
    s.get("wm_threshold", c.trainer.wm_threshold);
    s.get("batch", c.trainer.batch);
    s.get("max_lines", c.trainer.max_lines);
    s.get("max_chars", c.trainer.max_chars);
    if (const json* p = s.sub("phases")) c.trainer.phases = phases_from_json(*p);
    s.get("seed", c.trainer.seed);
    s.get("use_glyph_embedding", c.trainer.use_glyph_embedding);
    s.get("use_position", c.trainer.use_position);
    s.get("log_every", c.trainer.log_every);
  }
  if (j.contains("bench")) {
    Section s(j["bench"], "bench");
    s.get("steps", c.bench.steps);
    s.get("cfg_scale", c.bench.cfg_scale);
    s.get("seed", c.bench.seed);
    s.get("batch", c.bench.batch);
    s.get("positive_prompt", c.bench.positive_prompt);
    s.get("negative_prompt", c.bench.negative_prompt);
    s.get("skip_fid", c.bench.skip_fid);
  }
  c.validate();
  return c;
}

GlobalConfig GlobalConfig::load(const std::string& path) {
  std::ifstream is(path);
  check(is.good(), "config_missing", "cannot open config " + path);
  json j;
  try {
    is >> j;
  } catch (const std::exception& e) {
    throw Error("config_invalid", std::string("config parse error: ") + e.what());
  }
  return from_json(j);
}

void GlobalConfig::save(const std::string& path) const {
  std::ofstream os(path);
  check(os.good(), "io_error", "cannot write config " + path);
  os << to_json().dump(1) << "\n";
}

std::string GlobalConfig::hash() const { return hash_hex(to_json().dump()); }

void GlobalConfig::validate() const {
  check(corpus.image_size % 4 == 0 && corpus.image_size >= 16, "config_invalid",
        "corpus.image_size must be a multiple of the VAE downsample factor (4)");
  check(!corpus.alphabet.empty(), "config_invalid", "corpus.alphabet empty");
  check(!corpus.line_count_probs.empty() &&
            int(corpus.line_count_probs.size()) <= filter.max_lines,
        "config_invalid", "corpus.line_count_probs size");
  check(corpus.min_chars >= 1 && corpus.min_chars <= corpus.max_chars, "config_invalid",
        "corpus chars-per-line range");
  check(filter.area_mode == "polygon" || filter.area_mode == "bbox", "config_invalid",
        "filter.area_mode must be polygon|bbox");
  for (const RecognizerConfig* r : {&ocr_train, &ocr_eval}) {
    check(r->input_w % r->max_slots == 0, "config_invalid",
          "recognizer input width must be divisible by max_slots");
    check(r->widths.size() >= 2, "config_invalid", "recognizer widths");
  }
  check(int(auxlatent.vae_channels.size()) == 3, "config_invalid",
        "auxlatent.vae_channels must have 3 stages");
  int gstages = 2;
  for (int s = render.glyph_scale; s > 1; s /= 2) ++gstages;
  check(int(auxlatent.glyph_channels.size()) == gstages, "config_invalid",
        "auxlatent.glyph_channels must have log2(4*glyph_scale) stages");
  check(int(auxlatent.position_channels.size()) == 2, "config_invalid",
        "auxlatent.position_channels must have 2 stages");
  check(diffusion.unet_channels.size() >= 2, "config_invalid", "diffusion.unet_channels");
  check(diffusion.attn_from_level >= 0 &&
            diffusion.attn_from_level < int(diffusion.unet_channels.size()),
        "config_invalid", "diffusion.attn_from_level out of range");
  check(diffusion.timesteps >= 1, "config_invalid", "diffusion.timesteps");
  check(0 < diffusion.beta_start && diffusion.beta_start <= diffusion.beta_end &&
            diffusion.beta_end < 1,
        "config_invalid", "beta schedule bounds");
  check(trainer.sigma >= 0 && trainer.sigma <= 1, "config_invalid", "trainer.sigma in [0,1]");
  check(trainer.lambda_tp >= 0, "config_invalid", "trainer.lambda_tp >= 0");
  bool any_perceptual = false;
  int total_epochs = 0;
  for (const auto& p : trainer.phases) {
    any_perceptual = any_perceptual || p.perceptual;
    total_epochs += p.epochs;
    check(p.epochs >= 0, "config_invalid", "phase epochs >= 0");
  }
  check(total_epochs > 0, "config_invalid", "trainer.phases must cover at least one epoch");
  check((trainer.lambda_tp == 0) == !any_perceptual, "config_invalid",
        "lambda_tp = 0 iff no phase enables the perceptual loss");
  check(trainer.max_lines >= 1 && trainer.max_chars >= 1, "config_invalid",
        "trainer.max_lines/max_chars");
  check(bench.steps >= 1, "config_invalid", "bench.steps >= 1");
  check(bench.cfg_scale >= 0, "config_invalid", "bench.cfg_scale >= 0");
}

GlobalConfig GlobalConfig::small_preset() {
  GlobalConfig c;
  c.corpus.image_size = 32;
  c.corpus.count = 768;
  c.corpus.eval_count = 48;
  c.corpus.max_chars = 4;
  c.corpus.line_count_probs = {1.0};
  c.corpus.rotated_prob = 0.0;
  c.filter = FilterConfig::scaled_for(32);
  c.render.line_h = 32;
  c.render.line_w = 128;
  for (RecognizerConfig* r : {&c.ocr_train, &c.ocr_eval}) {
    r->steps = 1600;
    r->holdout = 400;
    r->max_train_chars = 4;
  }
  c.ocr_train.widths = {12, 24, 48, 64};
  c.ocr_eval.widths = {16, 32, 56, 72};
  c.textenc.d_model = 64;
  c.auxlatent.vae_channels = {24, 48, 48};
  c.auxlatent.vae_steps = 2500;
  c.diffusion.unet_channels = {32, 64, 96};
  c.diffusion.res_blocks = 1;
  c.diffusion.time_dim = 64;
  c.diffusion.base_epochs = 4;
  c.trainer.lr = 3e-4;
  c.trainer.batch = 8;
  return c;
}

GlobalConfig GlobalConfig::smoke_preset() {
  GlobalConfig c = small_preset();
  c.corpus.count = 160;
  c.corpus.eval_count = 16;
  for (RecognizerConfig* r : {&c.ocr_train, &c.ocr_eval}) {
    r->steps = 220;
    r->holdout = 64;
    r->accuracy_gate = 0.0;  // smoke checks integrity, not quality gates
    r->abort_below = 0.0;
  }
  c.ocr_train.widths = {8, 16, 32, 48};
  c.ocr_eval.widths = {12, 20, 40, 56};
  c.auxlatent.vae_steps = 250;
  c.auxlatent.psnr_gate = 0.0;
  c.diffusion.unet_channels = {24, 48};
  c.diffusion.base_epochs = 2;
  c.trainer.phases = {{2, false, false}, {1, true, false}, {1, true, true}};
  c.bench.skip_fid = false;
  return c;
}

}  // namespace gd
