#pragma once

// One audio segment's worth of pipeline input: an optional reference
// transcript and an ordered list of hypotheses. Index 0 is the greedy
// decode and serves as the baseline transcript everywhere.

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace recover {

struct SegmentRecord {
  std::string segment_id;
  std::optional<std::string> reference;
  std::vector<std::string> hypotheses;  // non-empty; index 0 is the primary
  std::map<std::string, std::string> metadata;
};

}  // namespace recover
