#pragma once

#include <utility>
#include <vector>

#include "vsum/linalg.hpp"

namespace vsum::temporal {

// Contiguous frame interval, both ends inclusive, 0-based.
struct Interval {
  int start = 0;
  int end = 0;
  int length() const { return end - start + 1; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

// Disjoint sorted intervals forming a summary.
using Keyshots = std::vector<Interval>;

// Sorted distinct frame indices.
using KeyframeSet = std::vector<int>;

// Per-frame scores in [0, 1].
using ImportanceCurve = std::vector<double>;

// Partition of [0, total) into contiguous intervals; starts[0] == 0.
struct Segmentation {
  std::vector<int> starts;
  int total = 0;

  int count() const { return static_cast<int>(starts.size()); }
  Interval segment(int i) const {
    const int end = (i + 1 < count()) ? starts[i + 1] - 1 : total - 1;
    return {starts[i], end};
  }
  friend bool operator==(const Segmentation&, const Segmentation&) = default;
};

void validate(const Segmentation& seg);
void validate_keyshots(const Keyshots& shots, int total_frames);

int keyshot_duration(const Keyshots& shots);
std::vector<char> keyshot_indicator(const Keyshots& shots, int total_frames);
Keyshots keyshots_from_indicator(const std::vector<char>& indicator);

// floor(fraction * total): the frame budget used throughout the project.
int budget_frames(int total_frames, double fraction);

// Change-point segmentation: minimizes the within-segment scatter of the
// linear-kernel Gram matrix plus a per-segment penalty. The penalty is
// calibrated by bisection so the mean segment length lands within +-25% of
// target_mean_len when such a segment count is reachable.
Segmentation kts_segment(const linalg::FeatureSequence& x, int target_mean_len,
                         int max_segments);

struct KnapsackItem {
  double value = 0;  // >= 0
  int duration = 1;  // >= 1
};

// Exact 0/1 knapsack over integer durations. Maximizes total value subject
// to total duration <= budget; equal-value solutions prefer smaller total
// duration, then the lexicographically smallest index set.
std::vector<int> knapsack_select(const std::vector<KnapsackItem>& items, int budget);

// keyframes -> keyshots + indicator curve. Candidate intervals are those
// containing at least one keyframe, valued by keyframe count / duration,
// selected by knapsack under budget_frames.
std::pair<Keyshots, ImportanceCurve> keyframes_to(const KeyframeSet& keyframes,
                                                  const Segmentation& seg,
                                                  int budget_frames);

// keyshots -> one keyframe per shot (deterministic middle frame,
// ceil((start+end)/2)) + indicator curve.
std::pair<KeyframeSet, ImportanceCurve> keyshots_to(const Keyshots& shots, int total_frames);

// frame scores -> keyshots (intervals valued by mean frame score, knapsack
// under budget) + one keyframe per selected shot (argmax score, earliest on
// ties).
std::pair<Keyshots, KeyframeSet> scores_to(const ImportanceCurve& scores,
                                           const Segmentation& seg, int budget_frames);

}  // namespace vsum::temporal
