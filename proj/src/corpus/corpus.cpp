#include "glyphdiff/corpus/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "glyphdiff/core/error.hpp"

namespace gd::corpus {

namespace fs = std::filesystem;
using nlohmann::json;

const std::array<std::string, 10> kConnectors = {
    ", content and position of the texts are ",
    ", textual material depicted in the image are ",
    ", texts that say ",
    ", captions shown in the snapshot are ",
    ", with the words of ",
    ", that reads ",
    ", the written materials on the picture: ",
    ", these texts are written on it: ",
    ", captions are ",
    ", content of the text in the graphic is ",
};

int count_placeholders(const std::string& caption) {
  return int(std::count(caption.begin(), caption.end(), '*'));
}

std::string apply_caption_template(const std::string& base_caption, int n_lines, Rng& rng) {
  if (n_lines <= 0) return base_caption;
  std::string stripped;
  stripped.reserve(base_caption.size());
  for (char c : base_caption)
    if (c != '*') stripped.push_back(c);
  std::string out = stripped + kConnectors[rng.below(kConnectors.size())];
  for (int i = 0; i < n_lines; ++i) {
    if (i > 0) out += ", ";
    out += "*";
  }
  return out;
}

// ---------------- filtering ----------------

namespace {

double line_area(const TextLine& l, const FilterConfig& cfg) {
  if (cfg.area_mode == "bbox") {
    double x0, y0, x1, y1;
    polygon_bounds(l.polygon, x0, y0, x1, y1);
    return std::max(0.0, x1 - x0) * std::max(0.0, y1 - y0);
  }
  return polygon_area(l.polygon);
}

double line_height(const TextLine& l) { return min_area_rect(l.polygon).h; }

bool all_whitespace(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

FilterDecision filter_record(const RawRecord& r, const FilterConfig& cfg) {
  FilterDecision d;
  bool bad_polygon = false;
  for (const TextLine& l : r.lines)
    if (l.polygon.size() < 4 || !polygon_is_simple(l.polygon) || polygon_area(l.polygon) <= 0)
      bad_polygon = true;
  if (bad_polygon) d.reasons.push_back("bad_polygon");

  if (std::min(r.width, r.height) < cfg.min_side) d.reasons.push_back("min_side");
  double aspect = r.height > 0 ? r.width / r.height : 0;
  if (aspect < cfg.aspect_min || aspect > cfg.aspect_max) d.reasons.push_back("aspect_ratio");
  if (!bad_polygon) {
    double area = 0;
    for (const TextLine& l : r.lines) area += line_area(l, cfg);
    if (r.width * r.height <= 0 || area < cfg.min_text_area_frac * r.width * r.height)
      d.reasons.push_back("text_area");
  }
  if (int(r.lines.size()) > cfg.max_lines) d.reasons.push_back("max_lines");
  d.keep = d.reasons.empty();

  for (const TextLine& l : r.lines) {
    std::vector<std::string> why;
    if (l.polygon.size() >= 4 && polygon_is_simple(l.polygon)) {
      if (line_height(l) < cfg.min_text_height) why.push_back("line_height");
    }
    if (l.score < cfg.min_ocr_score) why.push_back("line_score");
    if (l.text.empty() || all_whitespace(l.text)) why.push_back("line_text");
    d.line_valid.push_back(why.empty());
    d.line_reasons.push_back(std::move(why));
  }
  return d;
}

// ---------------- generation ----------------

namespace {

const std::array<const char*, 10> kNouns = {"sign",    "poster", "card",  "banner", "label",
                                            "board",   "sticker", "panel", "badge",  "notice"};
const std::array<const char*, 10> kAdjs = {"red",   "blue",  "green", "yellow", "small",
                                           "large", "bright", "dark",  "plain",  "simple"};

std::string base_caption(Rng& rng) {
  std::string adj = kAdjs[rng.below(kAdjs.size())];
  std::string noun = kNouns[rng.below(kNouns.size())];
  switch (rng.below(4)) {
    case 0: return "a " + adj + " " + noun;
    case 1: return "a photo of a " + adj + " " + noun;
    case 2: return "a " + adj + " " + noun + " on a wall";
    default: return "an image of a " + adj + " " + noun;
  }
}

void flat_background(Image& img, Rng& rng) {
  for (int c = 0; c < 3; ++c) {
    float v = float(rng.uniform(-0.85, 0.85));
    std::fill(img.data() + c * img.dim(1) * img.dim(2),
              img.data() + (c + 1) * img.dim(1) * img.dim(2), v);
  }
}

void gradient_background(Image& img, Rng& rng) {
  int h = img.dim(1), w = img.dim(2);
  float a[3], b[3];
  for (int c = 0; c < 3; ++c) {
    a[c] = float(rng.uniform(-0.85, 0.85));
    b[c] = float(rng.uniform(-0.85, 0.85));
  }
  double ang = rng.uniform(0, 6.283185307179586);
  double dx = std::cos(ang), dy = std::sin(ang);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double t = ((x + 0.5) / w - 0.5) * dx + ((y + 0.5) / h - 0.5) * dy + 0.5;
      t = std::clamp(t, 0.0, 1.0);
      for (int c = 0; c < 3; ++c)
        img.data()[(c * h + y) * w + x] = float(a[c] + (b[c] - a[c]) * t);
    }
}

// Low-frequency value noise: a coarse random lattice upsampled bilinearly.
void noise_background(Image& img, Rng& rng) {
  int h = img.dim(1), w = img.dim(2);
  const int gh = 5, gw = 5;
  float base[3];
  for (int c = 0; c < 3; ++c) base[c] = float(rng.uniform(-0.6, 0.6));
  for (int c = 0; c < 3; ++c) {
    float grid[gh][gw];
    for (auto& row : grid)
      for (float& v : row) v = float(rng.uniform(-0.35, 0.35));
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double gy = (y + 0.5) / h * (gh - 1);
        double gx = (x + 0.5) / w * (gw - 1);
        int y0 = std::min(int(gy), gh - 2), x0 = std::min(int(gx), gw - 2);
        double fy = gy - y0, fx = gx - x0;
        double v = grid[y0][x0] * (1 - fx) * (1 - fy) + grid[y0][x0 + 1] * fx * (1 - fy) +
                   grid[y0 + 1][x0] * (1 - fx) * fy + grid[y0 + 1][x0 + 1] * fx * fy;
        img.data()[(c * h + y) * w + x] = std::clamp(base[c] + float(v), -0.95f, 0.95f);
      }
  }
}

float region_luminance(const Image& img, double x0, double y0, double x1, double y1) {
  int h = img.dim(1), w = img.dim(2);
  int ax = std::clamp(int(x0), 0, w - 1), bx = std::clamp(int(x1), 0, w - 1);
  int ay = std::clamp(int(y0), 0, h - 1), by = std::clamp(int(y1), 0, h - 1);
  double acc = 0;
  int n = 0;
  for (int y = ay; y <= by; ++y)
    for (int x = ax; x <= bx; ++x) {
      acc += 0.299 * img.data()[(0 * h + y) * w + x] + 0.587 * img.data()[(1 * h + y) * w + x] +
             0.114 * img.data()[(2 * h + y) * w + x];
      ++n;
    }
  return n ? float(acc / n) : 0.0f;
}

}  // namespace

Sample generate_sample(const CorpusConfig& cfg, const StrokeFont& font, uint64_t seed,
                       int index) {
  Rng root(seed);
  Rng rng = root.derive(uint64_t(index));
  int n = cfg.image_size;
  Sample s;
  s.image = Image({3, n, n});

  switch (rng.below(3)) {
    case 0: flat_background(s.image, rng); break;
    case 1: gradient_background(s.image, rng); break;
    default: noise_background(s.image, rng); break;
  }

  int n_lines = 1 + int(rng.categorical(cfg.line_count_probs));
  double band = double(n) / n_lines;
  double h_min = std::max(n * 0.22, 4.0);
  double h_max = std::max(h_min, std::min(band * 0.62, n * 0.32));

  for (int li = 0; li < n_lines; ++li) {
    int len = rng.range(cfg.min_chars, cfg.max_chars);
    std::string text;
    for (int i = 0; i < len; ++i) text += cfg.alphabet[rng.below(cfg.alphabet.size())];

    double size = rng.uniform(h_min, h_max);
    // shrink (and trim if needed) until the line fits horizontally
    double max_w = n - 6.0;
    while (text.size() > 1 && font.text_width(text) * h_min > max_w) text.pop_back();
    size = std::min(size, max_w / font.text_width(text));

    int ch = int(std::ceil(size)) + 2;
    int cw = int(std::ceil(font.text_width(text) * size)) + 2;
    Tensor<float> canvas({1, ch, cw});
    font.draw_text(canvas, text, 1.0, 1.0, size);

    double theta = 0;
    if (rng.u01() < cfg.rotated_prob)
      theta = rng.uniform(-cfg.max_rotation_deg, cfg.max_rotation_deg) * M_PI / 180.0;

    // placement inside this line's band, keeping the rotated box in bounds
    double diag_pad = std::abs(std::sin(theta)) * cw * 0.5;
    double y_lo = li * band + 1 + diag_pad;
    double y_hi = (li + 1) * band - ch - 1 - diag_pad;
    if (y_hi < y_lo) {
      theta = 0;
      y_lo = li * band + 1;
      y_hi = std::max(y_lo, (li + 1) * band - ch - 1);
    }
    double x0 = std::floor(rng.uniform(2, std::max(2.1, double(n - cw - 2))));
    double y0 = std::floor(rng.uniform(y_lo, y_hi + 0.001));
    double cx = x0 + cw * 0.5, cy = y0 + ch * 0.5;

    // scene-space coverage
    Tensor<float> cov({1, n, n});
    Polygon poly;
    double ct = std::cos(theta), st = std::sin(theta);
    for (auto [u, v] : {std::pair{0.0, 0.0}, {double(cw), 0.0}, {double(cw), double(ch)},
                        {0.0, double(ch)}}) {
      double rx = u - cw * 0.5, ry = v - ch * 0.5;
      poly.push_back({cx + rx * ct - ry * st, cy + rx * st + ry * ct});
    }
    if (theta == 0) {
      for (int y = 0; y < ch; ++y)
        for (int x = 0; x < cw; ++x) {
          int sy = int(y0) + y, sx = int(x0) + x;
          if (sy < 0 || sy >= n || sx < 0 || sx >= n) continue;
          cov.data()[sy * n + sx] = canvas.data()[y * cw + x];
        }
    } else {
      // sample canvas through the inverse rotation
      std::array<float, 6> m = {float(ct), float(st), float(cw * 0.5 - ct * cx - st * cy),
                                float(-st), float(ct), float(ch * 0.5 + st * cx - ct * cy)};
      cov = affine_sample_image(canvas, m, n, n);
    }

    // ink with guaranteed luminance contrast against the local background
    double bx0, by0, bx1, by1;
    polygon_bounds(poly, bx0, by0, bx1, by1);
    float bg = region_luminance(s.image, bx0, by0, bx1, by1);
    double up_room = 0.92 - bg, down_room = bg + 0.92;
    bool brighter = (up_room >= cfg.min_contrast && down_room >= cfg.min_contrast)
                        ? rng.u01() < 0.5
                        : up_room > down_room;
    double reach = brighter ? up_room : down_room;
    double delta = cfg.min_contrast + rng.u01() * std::max(0.0, reach - cfg.min_contrast);
    float v = float(bg + (brighter ? delta : -delta));
    float jr = float(rng.uniform(-0.08, 0.08)), jb = float(rng.uniform(-0.08, 0.08));
    float jg = -(0.299f * jr + 0.114f * jb) / 0.587f;  // zero-luminance jitter
    float ink[3] = {std::clamp(v + jr, -1.0f, 1.0f), std::clamp(v + jg, -1.0f, 1.0f),
                    std::clamp(v + jb, -1.0f, 1.0f)};

    for (int c = 0; c < 3; ++c)
      for (int p = 0; p < n * n; ++p) {
        float a = cov.data()[p];
        if (a > 0)
          s.image.data()[c * n * n + p] =
              s.image.data()[c * n * n + p] * (1 - a) + ink[c] * a;
      }

    TextLine line;
    line.text = text;
    line.polygon = poly;
    line.score = 1.0;
    line.valid = true;
    s.lines.push_back(std::move(line));
  }

  s.caption = apply_caption_template(base_caption(rng), int(s.lines.size()), rng);
  s.wm_score = rng.u01();
  return s;
}

std::vector<Sample> generate_corpus(const CorpusConfig& cfg, uint64_t seed) {
  StrokeFont font = StrokeFont::load(cfg.font);
  for (char c : cfg.alphabet)
    check(font.has_glyph(c), "font_glyph_missing",
          std::string("alphabet glyph '") + c + "' missing from font " + font.name());
  std::vector<Sample> out;
  out.reserve(size_t(cfg.count));
  for (int i = 0; i < cfg.count; ++i) out.push_back(generate_sample(cfg, font, seed, i));
  return out;
}

// ---------------- stats ----------------

StatsReport dataset_stats(const std::vector<Sample>& samples) {
  StatsReport r;
  r.image_count = int64_t(samples.size());
  std::set<char> uniq;
  int64_t images_le5 = 0, lines_le20 = 0;
  for (const Sample& s : samples) {
    if (s.lines.empty()) ++r.images_without_text;
    if (int(s.lines.size()) <= 5) ++images_le5;
    for (const TextLine& l : s.lines) {
      ++r.line_count;
      r.char_count += int64_t(l.text.size());
      if (int(l.text.size()) <= 20) ++lines_le20;
      for (char c : l.text) uniq.insert(c);
    }
  }
  r.unique_chars = int64_t(uniq.size());
  if (r.image_count > 0) {
    r.mean_lines_per_image = double(r.line_count) / double(r.image_count);
    r.frac_images_le5_lines = double(images_le5) / double(r.image_count);
  }
  if (r.line_count > 0) {
    r.mean_chars_per_line = double(r.char_count) / double(r.line_count);
    r.frac_lines_le20_chars = double(lines_le20) / double(r.line_count);
  }
  return r;
}

nlohmann::json StatsReport::to_json() const {
  return json{{"image_count", image_count},
              {"images_without_text", images_without_text},
              {"line_count", line_count},
              {"mean_lines_per_image", mean_lines_per_image},
              {"frac_images_le5_lines", frac_images_le5_lines},
              {"char_count", char_count},
              {"unique_chars", unique_chars},
              {"mean_chars_per_line", mean_chars_per_line},
              {"frac_lines_le20_chars", frac_lines_le20_chars}};
}

// ---------------- persistence ----------------

void save_dataset(const std::string& dir, const std::string& name,
                  const std::vector<Sample>& samples) {
  fs::create_directories(fs::path(dir) / "imgs");
  std::string tmp = (fs::path(dir) / (name + ".jsonl.tmp")).string();
  std::ofstream os(tmp);
  check(os.good(), "io_error", "cannot write dataset " + tmp);
  for (size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = samples[i];
    std::string img_rel = "imgs/" + name + "_" + std::to_string(i) + ".png";
    check(!s.image.empty(), "missing_image", "sample has no image data");
    save_png((fs::path(dir) / img_rel).string(), s.image);
    json lines = json::array();
    for (const TextLine& l : s.lines) {
      json poly = json::array();
      for (const Vec2& p : l.polygon) poly.push_back({p.x, p.y});
      lines.push_back(
          {{"text", l.text}, {"polygon", poly}, {"score", l.score}, {"valid", l.valid}});
    }
    json row = {{"img_path", img_rel},
                {"caption", s.caption},
                {"wm_score", s.wm_score},
                {"lines", lines}};
    os << row.dump() << "\n";
  }
  os.close();
  std::string final_path = (fs::path(dir) / (name + ".jsonl")).string();
  check(std::rename(tmp.c_str(), final_path.c_str()) == 0, "io_error",
        "rename failed for " + final_path);
}

std::vector<Sample> load_dataset(const std::string& jsonl_path, bool load_images) {
  std::ifstream is(jsonl_path);
  check(is.good(), "io_error", "cannot open dataset " + jsonl_path);
  fs::path base = fs::path(jsonl_path).parent_path();
  std::vector<Sample> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    json row;
    try {
      row = json::parse(line);
    } catch (const std::exception& e) {
      throw Error("bad_dataset", "dataset parse error: " + std::string(e.what()));
    }
    Sample s;
    s.img_path = row.at("img_path").get<std::string>();
    s.caption = row.at("caption").get<std::string>();
    s.wm_score = row.at("wm_score").get<double>();
    for (const auto& lj : row.at("lines")) {
      TextLine l;
      l.text = lj.at("text").get<std::string>();
      for (const auto& p : lj.at("polygon"))
        l.polygon.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      l.score = lj.at("score").get<double>();
      l.valid = lj.at("valid").get<bool>();
      s.lines.push_back(std::move(l));
    }
    if (load_images) s.image = load_png((base / s.img_path).string());
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace gd::corpus
