#include "glyphdiff/ocr/recognizer.hpp"

#include <cmath>

#include "glyphdiff/core/optim.hpp"

namespace gd::ocr {

template <typename S>
RecognizerNet<S> RecognizerNet<S>::build(ParamStore<S>& ps, const RecognizerConfig& cfg,
                                         Rng& init) {
  RecognizerNet<S> net;
  net.cfg = cfg;
  int in = 1;
  for (size_t i = 0; i < cfg.widths.size(); ++i) {
    net.convs.push_back(Conv2d<S>::create(ps, "conv" + std::to_string(i), in, cfg.widths[i], 3,
                                          2, 1, init));
    in = cfg.widths[i];
  }
  int k = int(cfg.alphabet.size()) + 1;
  net.head = Linear<S>::create(ps, "head", in, k, init);
  return net;
}

template <typename S>
Var<S> RecognizerNet<S>::backbone(Tape<S>& t, Var<S> x) const {
  for (const auto& conv : convs) x = silu(conv(t, x));
  return x;
}

template <typename S>
Var<S> RecognizerNet<S>::pooled(Tape<S>& t, Var<S> fm) const {
  return avgpool_all(fm);
}

template <typename S>
Var<S> RecognizerNet<S>::slot_logits(Tape<S>& t, Var<S> fm) const {
  int n = fm.dim(0);
  Var<S> slots = slot_pool(fm, cfg.max_slots);  // [N,slots,C']
  int k = int(cfg.alphabet.size()) + 1;
  Var<S> logits = head(t, slots);  // [N,slots,K+1]
  return reshape(logits, {n * cfg.max_slots, k});
}

template struct RecognizerNet<float>;
template struct RecognizerNet<double>;

// ---------------- training data ----------------

TrainLine make_train_line(const RecognizerConfig& cfg, const StrokeFont& font, Rng& rng,
                          bool augment) {
  TrainLine out;
  int len = rng.range(1, cfg.max_train_chars);
  for (int i = 0; i < len; ++i) out.text += cfg.alphabet[rng.below(cfg.alphabet.size())];

  std::vector<StrokeFont::CharBox> boxes;
  Tensor<float> clean =
      render::render_text_line(out.text, cfg.input_h, cfg.input_w, font, 64, &boxes);

  double theta = 0, scale = 1, tx = 0, ty = 0;
  if (augment) {
    theta = rng.uniform(-10.0, 10.0) * M_PI / 180.0;
    scale = rng.uniform(0.9, 1.1);
    tx = rng.uniform(-2.0, 2.0);
    ty = rng.uniform(-2.0, 2.0);
  }
  double cx = cfg.input_w * 0.5, cy = cfg.input_h * 0.5;
  double ct = std::cos(theta) * scale, st = std::sin(theta) * scale;
  // forward map (clean -> augmented): p' = R*s*(p-c) + c + t
  auto fwd = [&](double x, double y) {
    double rx = x - cx, ry = y - cy;
    return Vec2{ct * rx - st * ry + cx + tx, st * rx + ct * ry + cy + ty};
  };
  // inverse map for sampling
  double inv_s = 1.0 / scale;
  double ict = std::cos(theta) * inv_s, ist = std::sin(theta) * inv_s;
  std::array<float, 6> m = {
      float(ict), float(ist), float(cx - ict * (cx + tx) - ist * (cy + ty)),
      float(-ist), float(ict), float(cy + ist * (cx + tx) - ict * (cy + ty))};
  Tensor<float> cov = augment ? affine_sample_image(clean, m, cfg.input_h, cfg.input_w) : clean;

  // gray levels with guaranteed contrast, random polarity
  double bg = rng.uniform(-0.9, 0.9);
  double up = 0.95 - bg, down = bg + 0.95;
  bool brighter = (up >= 0.3 && down >= 0.3) ? rng.u01() < 0.5 : up > down;
  double room = brighter ? up : down;
  double delta = 0.3 + rng.u01() * std::max(0.0, room - 0.3);
  double fg = bg + (brighter ? delta : -delta);

  out.image = Image({1, cfg.input_h, cfg.input_w});
  double noise_sigma = augment ? rng.uniform(0.0, 0.08) : 0.0;
  for (int p = 0; p < out.image.numel(); ++p) {
    double v = bg + (fg - bg) * double(cov[p]);
    if (noise_sigma > 0) v += rng.normal() * noise_sigma;
    out.image[p] = float(std::clamp(v, -1.0, 1.0));
  }

  // slot targets from augmented character centers
  int blank = int(cfg.alphabet.size());
  out.slot_targets.assign(size_t(cfg.max_slots), blank);
  double slot_w = double(cfg.input_w) / cfg.max_slots;
  for (size_t i = 0; i < boxes.size(); ++i) {
    Vec2 c = fwd((boxes[i].x0 + boxes[i].x1) * 0.5, cy);
    int slot = std::clamp(int(c.x / slot_w), 0, cfg.max_slots - 1);
    out.slot_targets[size_t(slot)] = int(cfg.alphabet.find(out.text[i]));
  }
  return out;
}

// ---------------- recognizer ----------------

void Recognizer::rebuild() {
  Rng init(cfg.seed);
  net = RecognizerNet<float>::build(params, cfg, init);
}

Recognizer Recognizer::pretrain(const RecognizerConfig& cfg, const StrokeFont& font,
                                PretrainReport* report) {
  for (char c : cfg.alphabet)
    check(font.has_glyph(c), "font_glyph_missing",
          std::string("recognizer alphabet glyph '") + c + "' missing from font");
  Recognizer r;
  r.cfg = cfg;
  r.rebuild();
  AdamW<float> opt(float(cfg.lr), 0.0f);
  Rng root(cfg.seed);
  PretrainReport rep;

  for (int step = 0; step < cfg.steps; ++step) {
    Tensor<float> batch({cfg.batch, 1, cfg.input_h, cfg.input_w});
    std::vector<int> targets;
    for (int i = 0; i < cfg.batch; ++i) {
      Rng srng = root.derive(uint64_t(step) * uint64_t(cfg.batch) + uint64_t(i) + 1);
      TrainLine tl = make_train_line(cfg, font, srng, /*augment=*/true);
      std::copy(tl.image.data(), tl.image.data() + tl.image.numel(),
                batch.data() + i * tl.image.numel());
      targets.insert(targets.end(), tl.slot_targets.begin(), tl.slot_targets.end());
    }
    r.params.zero_grads();
    Tape<float> t;
    Var<float> x = t.input(std::move(batch), false);
    Var<float> logits = r.net.slot_logits(t, r.net.backbone(t, x));
    Var<float> loss = cross_entropy(logits, targets);
    t.backward(loss);
    opt.step(r.params);
    rep.final_loss = loss.val()[0];
    if (step % 50 == 0) rep.loss_curve.push_back(rep.final_loss);
  }
  rep.steps = cfg.steps;

  // held-out gate: disjoint RNG streams
  int correct = 0;
  std::vector<Image> imgs;
  std::vector<std::string> texts;
  for (int i = 0; i < cfg.holdout; ++i) {
    Rng srng = root.derive((uint64_t(1) << 40) + uint64_t(i));
    TrainLine tl = make_train_line(cfg, font, srng, /*augment=*/true);
    imgs.push_back(tl.image);
    texts.push_back(tl.text);
  }
  std::vector<std::string> preds = r.recognize_batch(imgs);
  for (int i = 0; i < cfg.holdout; ++i)
    if (preds[size_t(i)] == texts[size_t(i)]) ++correct;
  rep.holdout_accuracy = cfg.holdout > 0 ? double(correct) / cfg.holdout : 1.0;
  if (report != nullptr) *report = rep;
  check(rep.holdout_accuracy >= cfg.abort_below, "recognizer_undertrained",
        "recognizer held-out accuracy " + std::to_string(rep.holdout_accuracy) +
            " below abort threshold " + std::to_string(cfg.abort_below) +
            " after " + std::to_string(cfg.steps) + " steps (final loss " +
            std::to_string(rep.final_loss) + ")");

  for (Param<float>* p : r.params.all()) p->trainable = false;  // frozen from here on
  return r;
}

std::vector<std::string> Recognizer::recognize_batch(const std::vector<Image>& imgs) const {
  std::vector<std::string> out;
  if (imgs.empty()) return out;
  int blank = int(cfg.alphabet.size());
  int k = blank + 1;
  size_t pos = 0;
  const size_t chunk = 64;
  while (pos < imgs.size()) {
    size_t n = std::min(chunk, imgs.size() - pos);
    Tensor<float> batch({int(n), 1, cfg.input_h, cfg.input_w});
    for (size_t i = 0; i < n; ++i) {
      const Image& im = imgs[pos + i];
      check(im.ndim() == 3 && im.dim(0) == 1 && im.dim(1) == cfg.input_h &&
                im.dim(2) == cfg.input_w,
            "bad_shape", "recognizer input must be [1,H,W] at the configured size");
      std::copy(im.data(), im.data() + im.numel(), batch.data() + int(i) * im.numel());
    }
    Tape<float> t;
    Var<float> logits = net.slot_logits(t, net.backbone(t, t.input(std::move(batch), false)));
    const Tensor<float>& lv = logits.val();
    for (size_t i = 0; i < n; ++i) {
      std::string s;
      for (int slot = 0; slot < cfg.max_slots; ++slot) {
        const float* row = lv.data() + (int(i) * cfg.max_slots + slot) * k;
        int best = 0;
        for (int j = 1; j < k; ++j)
          if (row[j] > row[best]) best = j;
        if (best != blank) s += cfg.alphabet[size_t(best)];
      }
      out.push_back(std::move(s));
    }
    pos += n;
  }
  return out;
}

std::string Recognizer::recognize(const Image& img) const {
  return recognize_batch({img})[0];
}

OCRFeatures Recognizer::extract_features(const Image& img) const {
  check(img.ndim() == 3 && img.dim(0) == 1, "bad_shape", "extract_features input");
  Tape<float> t;
  Tensor<float> batch = img.reshaped({1, 1, img.dim(1), img.dim(2)});
  Var<float> fm = net.backbone(t, t.input(std::move(batch), false));
  Var<float> pool = net.pooled(t, fm);
  OCRFeatures f;
  f.feature_map = fm.val().reshaped({fm.dim(1), fm.dim(2), fm.dim(3)});
  f.pooled = pool.val().reshaped({pool.dim(1)});
  return f;
}

Tensor<float> Recognizer::image_feature(const Image& rgb) const {
  check(rgb.ndim() == 3 && rgb.dim(0) == 3, "bad_shape", "image_feature wants RGB");
  int h = rgb.dim(1), w = rgb.dim(2);
  Image lum({1, h, w});
  for (int p = 0; p < h * w; ++p)
    lum[p] = 0.299f * rgb[p] + 0.587f * rgb[h * w + p] + 0.114f * rgb[2 * h * w + p];
  Image rs = resize_bilinear(lum, cfg.input_h, cfg.input_h);
  Tape<float> t;
  Var<float> fm =
      net.backbone(t, t.input(rs.reshaped({1, 1, cfg.input_h, cfg.input_h}), false));
  Var<float> pool = net.pooled(t, fm);
  return pool.val().reshaped({pool.dim(1)});
}

Image Recognizer::glyph_to_input(const Tensor<float>& g) {
  Image out = g;
  out.array() = g.array() * 2.0f - 1.0f;
  return out;
}

uint64_t params_checksum(const ParamStore<float>& ps) {
  uint64_t h = 1469598103934665603ull;
  for (const Param<float>* p : ps.all()) {
    for (unsigned char c : p->name) {
      h ^= c;
      h *= 1099511628211ull;
    }
    const auto* bytes = reinterpret_cast<const unsigned char*>(p->value.data());
    for (size_t i = 0; i < sizeof(float) * size_t(p->value.numel()); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  }
  return h;
}

uint64_t Recognizer::weight_checksum() const { return params_checksum(params); }

namespace {

nlohmann::json rec_cfg_json(const RecognizerConfig& c) {
  return {{"alphabet", c.alphabet}, {"max_slots", c.max_slots}, {"input_h", c.input_h},
          {"input_w", c.input_w},   {"widths", c.widths},       {"steps", c.steps},
          {"batch", c.batch},       {"lr", c.lr},               {"seed", c.seed},
          {"holdout", c.holdout},   {"max_train_chars", c.max_train_chars},
          {"accuracy_gate", c.accuracy_gate}, {"abort_below", c.abort_below}};
}

RecognizerConfig rec_cfg_from_json(const nlohmann::json& j) {
  RecognizerConfig c;
  c.alphabet = j.at("alphabet").get<std::string>();
  c.max_slots = j.at("max_slots").get<int>();
  c.input_h = j.at("input_h").get<int>();
  c.input_w = j.at("input_w").get<int>();
  c.widths = j.at("widths").get<std::vector<int>>();
  c.steps = j.at("steps").get<int>();
  c.batch = j.at("batch").get<int>();
  c.lr = j.at("lr").get<double>();
  c.seed = j.at("seed").get<uint64_t>();
  c.holdout = j.at("holdout").get<int>();
  c.max_train_chars = j.at("max_train_chars").get<int>();
  c.accuracy_gate = j.at("accuracy_gate").get<double>();
  c.abort_below = j.at("abort_below").get<double>();
  return c;
}

}  // namespace

void Recognizer::add_to_checkpoint(Checkpoint& ck, const std::string& prefix) const {
  ck.put_store(prefix, params);
  ck.meta[prefix + "config"] = rec_cfg_json(cfg);
}

Recognizer Recognizer::from_checkpoint(const Checkpoint& ck, const std::string& prefix) {
  Recognizer r;
  check(ck.meta.contains(prefix + "config"), "unreadable_checkpoint",
        "checkpoint lacks recognizer config " + prefix);
  r.cfg = rec_cfg_from_json(ck.meta.at(prefix + "config"));
  r.rebuild();
  ck.load_store(prefix, r.params);
  for (Param<float>* p : r.params.all()) p->trainable = false;
  return r;
}

void Recognizer::save(const std::string& path, const std::string& config_hash) const {
  Checkpoint ck;
  ck.meta["kind"] = "recognizer";
  ck.meta["config_hash"] = config_hash;
  add_to_checkpoint(ck, "ocr.");
  ck.save(path);
}

Recognizer Recognizer::load(const std::string& path) {
  Checkpoint ck = Checkpoint::load(path);
  check(ck.meta.value("kind", "") == "recognizer", "unreadable_checkpoint",
        path + " is not a recognizer checkpoint");
  return from_checkpoint(ck, "ocr.");
}

}  // namespace gd::ocr
