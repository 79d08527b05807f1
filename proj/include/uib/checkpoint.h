#ifndef UIB_CHECKPOINT_H_
#define UIB_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <string>

#include "uib/model.h"

namespace uib {

// Text checkpoint, version 1. One `key value` pair per line, in this order:
//
//   uib-checkpoint 1
//   architecture <logreg|mlp>
//   input_dim <n>
//   num_classes <n>
//   hidden_width <n>
//   l2_strength <hexfloat>
//   seed <n>
//   layers <L>
//   <start> <length>        (L lines)
//   theta <p>
//   <hexfloat>              (p lines)
//   end
//
// Doubles are written as C99 hexadecimal floats, so a load reproduces every
// bit that was saved.
struct Checkpoint {
  ModelSpec spec;
  ParamVector params;
  std::uint64_t seed = 0;
};

std::string SerializeCheckpoint(const Checkpoint& ckpt);
// Throws kParseError (with the offending line number) on malformed input and
// kShapeMismatch when the stored layout disagrees with the spec.
Checkpoint ParseCheckpoint(const std::string& text);

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

}  // namespace uib

#endif  // UIB_CHECKPOINT_H_
