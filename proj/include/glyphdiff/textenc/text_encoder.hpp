#pragma once

#include <map>
#include <string>
#include <vector>

#include "glyphdiff/config.hpp"
#include "glyphdiff/core/nn.hpp"
#include "glyphdiff/ocr/recognizer.hpp"

namespace gd::textenc {

// Whitespace tokenizer with ',' ':' and '*' split out as their own tokens.
std::vector<std::string> tokenize(const std::string& text);

class Vocabulary {
 public:
  static constexpr const char* kPad = "<pad>";
  static constexpr const char* kUnk = "<unk>";
  static constexpr const char* kPlaceholder = "*";

  // Deterministic vocabulary: specials first, then sorted unique tokens from
  // the captions and extra phrases (benchmark prompt suffixes etc).
  static Vocabulary build(const std::vector<std::string>& captions,
                          const std::vector<std::string>& extra_phrases = {});

  int id(const std::string& token) const;
  std::vector<int> encode(const std::string& text) const;
  int size() const { return int(tokens_.size()); }
  int pad_id() const { return 0; }
  int unk_id() const { return 1; }
  int placeholder_id() const { return placeholder_id_; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  // Plain-text token list, one per line.
  std::string to_text() const;
  static Vocabulary from_text(const std::string& text);

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int> index_;
  int placeholder_id_ = -1;

  void rebuild_index();
};

struct ProcessedCaption {
  std::vector<int> tokens;             // y'
  std::vector<int> placeholder_slots;  // strictly increasing indices into tokens
};

// Tokenizes the caption and records placeholder slots; errors with
// placeholder_arity when the "*" count does not match n_valid_lines.
ProcessedCaption process_caption(const std::string& caption, int n_valid_lines,
                                 const Vocabulary& vocab, int max_seq_len);

// One caption's encode request: slot i binds line_texts[i]; substitute[i]
// false keeps the plain placeholder embedding (used for lines dropped by the
// max-lines rule).
struct EncodeInput {
  std::vector<int> tokens;
  std::vector<int> slots;
  std::vector<std::string> line_texts;
  std::vector<bool> substitute;
};

// Trainable text encoder tau plus the glyph projection xi. The OCR
// recognizer stays frozen; its pooled features are cached per line text.
class TextEncoder {
 public:
  TextEncConfig cfg;

  static TextEncoder build(ParamStore<float>& ps, const std::string& prefix,
                           const TextEncConfig& cfg, int vocab_size, int ocr_pooled_dim,
                           Rng& init);

  // xi(gamma(e_g)): pooled OCR feature of the centered line render, projected
  // to d_model. Empty text uses the all-zeros glyph image (null-text path).
  Tensor<float> glyph_feature(const ocr::Recognizer& rec, const StrokeFont& font,
                              const std::string& text, int max_chars) const;
  Var<float> glyph_embedding(Tape<float>& t, const ocr::Recognizer& rec,
                             const StrokeFont& font, const std::string& text,
                             int max_chars) const;

  // Pre-transformer embedding of one caption: lookup, substitution at slots,
  // positional encodings added after substitution. Returns [T,d].
  Var<float> embed_with_substitution(Tape<float>& t, const EncodeInput& in,
                                     const ocr::Recognizer& rec, const StrokeFont& font,
                                     int max_chars) const;

  // Full batched encode -> c_te [N,Tmax,d]; valid_lens receives per-sample
  // token counts for attention masking downstream.
  Var<float> encode(Tape<float>& t, const std::vector<EncodeInput>& batch,
                    const ocr::Recognizer& rec, const StrokeFont& font, int max_chars,
                    std::vector<int>* valid_lens) const;

  void clear_cache() const { feature_cache_.clear(); }

 private:
  Param<float>* tok_embed_ = nullptr;  // [V,d]
  Param<float>* pos_embed_ = nullptr;  // [max_seq,d]
  Linear<float> xi_;                   // [c'' -> d]
  std::vector<TransformerBlock<float>> blocks_;
  LayerNorm<float> final_ln_;

  mutable std::map<std::string, Tensor<float>> feature_cache_;
};

}  // namespace gd::textenc
