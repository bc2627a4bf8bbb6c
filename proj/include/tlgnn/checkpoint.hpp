#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "tlgnn/corpus.hpp"
#include "tlgnn/edge_vocab.hpp"
#include "tlgnn/model.hpp"

namespace tlgnn {

// Binary layout, all integers little-endian u32 and all reals little-endian f32:
//
//   "TGNN" version
//   vocab_size dim num_edges num_classes
//   embeddings[vocab_size*dim] edge_weights[num_edges] gates[vocab_size]
//   dense_w[dim*num_classes] dense_b[num_classes]
//   vocabulary:  count, then per word: str word, u32 frequency; then u32 min_freq
//   edge vocab:  count, k, p, then per named edge: str "source\ttarget", u32 index
//   labels:      count, then str name per class
//   model:       reduction, f32 dropout_keep, edges_trainable, mpm_steps, readout
//   pmi:         present flag; if set: window, u32 windows_lo, u32 windows_hi,
//                count, then per pair: str "a\tb", f32 value
//
// `str` is a u32 byte length followed by UTF-8 bytes.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct ModelBundle {
  Params params;
  Vocabulary vocab;
  EdgeVocabulary edges;
  LabelSet labels;
  ModelConfig config;
  std::optional<PmiTable> pmi;
};

std::string encode_checkpoint(const ModelBundle& bundle);
ModelBundle decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const ModelBundle& bundle);
ModelBundle load_checkpoint(const std::filesystem::path& path);

}  // namespace tlgnn
