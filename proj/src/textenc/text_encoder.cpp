#include "glyphdiff/textenc/text_encoder.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "glyphdiff/render/render.hpp"

namespace gd::textenc {

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&]() {
    if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  };
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else if (c == ',' || c == ':' || c == '*') {
      flush();
      out.push_back(std::string(1, c));
    } else {
      cur.push_back(c);
    }
  }
  flush();
  return out;
}

void Vocabulary::rebuild_index() {
  index_.clear();
  for (size_t i = 0; i < tokens_.size(); ++i) index_[tokens_[i]] = int(i);
  auto it = index_.find(kPlaceholder);
  placeholder_id_ = it == index_.end() ? -1 : it->second;
}

Vocabulary Vocabulary::build(const std::vector<std::string>& captions,
                             const std::vector<std::string>& extra_phrases) {
  std::set<std::string> uniq;
  for (const std::string& c : captions)
    for (const std::string& t : tokenize(c)) uniq.insert(t);
  for (const std::string& c : extra_phrases)
    for (const std::string& t : tokenize(c)) uniq.insert(t);
  uniq.erase(kPlaceholder);
  Vocabulary v;
  v.tokens_ = {kPad, kUnk, kPlaceholder};
  for (const std::string& t : uniq) v.tokens_.push_back(t);
  v.rebuild_index();
  return v;
}

int Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? unk_id() : it->second;
}

std::vector<int> Vocabulary::encode(const std::string& text) const {
  std::vector<int> out;
  for (const std::string& t : tokenize(text)) out.push_back(id(t));
  if (out.empty()) out.push_back(pad_id());
  return out;
}

std::string Vocabulary::to_text() const {
  std::string out;
  for (const std::string& t : tokens_) out += t + "\n";
  return out;
}

Vocabulary Vocabulary::from_text(const std::string& text) {
  Vocabulary v;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line))
    if (!line.empty()) v.tokens_.push_back(line);
  check(v.tokens_.size() >= 3 && v.tokens_[0] == kPad && v.tokens_[1] == kUnk,
        "bad_vocabulary", "vocabulary text list is malformed");
  v.rebuild_index();
  check(v.placeholder_id_ >= 0, "bad_vocabulary", "vocabulary lacks the placeholder token");
  return v;
}

ProcessedCaption process_caption(const std::string& caption, int n_valid_lines,
                                 const Vocabulary& vocab, int max_seq_len) {
  ProcessedCaption out;
  out.tokens = vocab.encode(caption);
  if (int(out.tokens.size()) > max_seq_len) out.tokens.resize(size_t(max_seq_len));
  for (size_t i = 0; i < out.tokens.size(); ++i)
    if (out.tokens[i] == vocab.placeholder_id()) out.placeholder_slots.push_back(int(i));
  check(int(out.placeholder_slots.size()) == n_valid_lines, "placeholder_arity",
        "caption has " + std::to_string(out.placeholder_slots.size()) +
            " placeholders for " + std::to_string(n_valid_lines) + " lines");
  return out;
}

TextEncoder TextEncoder::build(ParamStore<float>& ps, const std::string& prefix,
                               const TextEncConfig& cfg, int vocab_size, int ocr_pooled_dim,
                               Rng& init) {
  TextEncoder te;
  te.cfg = cfg;
  te.tok_embed_ = ps.add(prefix + ".tok",
                         Tensor<float>::randn({vocab_size, cfg.d_model}, init, 0.02f));
  te.pos_embed_ = ps.add(prefix + ".pos",
                         Tensor<float>::randn({cfg.max_seq_len, cfg.d_model}, init, 0.02f));
  te.xi_ = Linear<float>::create(ps, prefix + ".xi", ocr_pooled_dim, cfg.d_model, init);
  for (int i = 0; i < cfg.n_layers; ++i)
    te.blocks_.push_back(TransformerBlock<float>::create(
        ps, prefix + ".block" + std::to_string(i), cfg.d_model, cfg.n_heads, init));
  te.final_ln_ = LayerNorm<float>::create(ps, prefix + ".ln", cfg.d_model);
  return te;
}

Tensor<float> TextEncoder::glyph_feature(const ocr::Recognizer& rec, const StrokeFont& font,
                                         const std::string& text, int max_chars) const {
  auto it = feature_cache_.find(text);
  if (it != feature_cache_.end()) return it->second;
  Tensor<float> line =
      render::render_text_line(text, rec.cfg.input_h, rec.cfg.input_w, font, max_chars);
  Tensor<float> pooled = rec.extract_features(ocr::Recognizer::glyph_to_input(line)).pooled;
  feature_cache_[text] = pooled;
  return pooled;
}

Var<float> TextEncoder::glyph_embedding(Tape<float>& t, const ocr::Recognizer& rec,
                                        const StrokeFont& font, const std::string& text,
                                        int max_chars) const {
  Tensor<float> feat = glyph_feature(rec, font, text, max_chars);
  Var<float> row = t.constant(feat.reshaped({1, feat.numel()}));
  return xi_(t, row);  // [1,d]
}

Var<float> TextEncoder::embed_with_substitution(Tape<float>& t, const EncodeInput& in,
                                                const ocr::Recognizer& rec,
                                                const StrokeFont& font, int max_chars) const {
  check(in.slots.size() == in.line_texts.size() &&
            in.slots.size() == in.substitute.size(),
        "placeholder_arity", "slots/line_texts arity mismatch");
  Var<float> emb = embedding(t.param(tok_embed_), in.tokens);  // [T,d]

  std::vector<int> active_slots;
  std::vector<Var<float>> rows;
  for (size_t i = 0; i < in.slots.size(); ++i) {
    if (!in.substitute[i]) continue;
    active_slots.push_back(in.slots[i]);
    rows.push_back(glyph_embedding(t, rec, font, in.line_texts[i], max_chars));
  }
  if (!rows.empty()) {
    Var<float> stacked = rows.size() == 1
                             ? rows[0]
                             : reshape(stack0(rows), {int(rows.size()), cfg.d_model});
    if (rows.size() == 1) stacked = reshape(stacked, {1, cfg.d_model});
    emb = row_substitute(emb, stacked, active_slots);
  }
  // positional encodings after substitution
  std::vector<int> positions(in.tokens.size());
  for (size_t i = 0; i < positions.size(); ++i) positions[i] = int(i);
  Var<float> pos = embedding(t.param(pos_embed_), positions);
  return add(emb, pos);
}

Var<float> TextEncoder::encode(Tape<float>& t, const std::vector<EncodeInput>& batch,
                               const ocr::Recognizer& rec, const StrokeFont& font,
                               int max_chars, std::vector<int>* valid_lens) const {
  check(!batch.empty(), "bad_shape", "encode of empty batch");
  int tmax = 1;
  for (const EncodeInput& in : batch) tmax = std::max(tmax, int(in.tokens.size()));
  std::vector<int> valid;
  std::vector<Var<float>> padded;
  for (const EncodeInput& in : batch) {
    Var<float> e = embed_with_substitution(t, in, rec, font, max_chars);
    valid.push_back(int(in.tokens.size()));
    padded.push_back(pad_rows(e, tmax));
  }
  Var<float> x = stack0(padded);  // [N,Tmax,d]
  for (const auto& block : blocks_) x = block(t, x, &valid);
  x = final_ln_(t, x);
  if (valid_lens != nullptr) *valid_lens = valid;
  return x;
}

}  // namespace gd::textenc
