#ifndef TIMELYFL_CHECKPOINT_H_
#define TIMELYFL_CHECKPOINT_H_

#include <filesystem>
#include <iosfwd>

#include "timelyfl/model.h"

namespace timelyfl {

// Text checkpoint, format version 1:
//
//   timelyfl-checkpoint 1
//   version <global version>
//   layers <count>
//   then per layer:
//     layer <in_dim> <out_dim> <relu|identity|softmax>
//     <out_dim lines of in_dim weights, row-major>
//     <one line of out_dim biases>
//
// Values are C99 hex floats (printf "%a"), so a save/load round trip is
// bit-exact.
void save_checkpoint(std::ostream& out, const LayeredModel& model);
LayeredModel load_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const LayeredModel& model);
LayeredModel load_checkpoint(const std::filesystem::path& path);

}  // namespace timelyfl

#endif  // TIMELYFL_CHECKPOINT_H_
