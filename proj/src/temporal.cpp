#include "vsum/temporal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vsum::temporal {

void validate(const Segmentation& seg) {
  if (seg.total <= 0) throw ContractError("segmentation: empty frame range");
  if (seg.starts.empty() || seg.starts.front() != 0)
    throw ContractError("segmentation: first interval must start at frame 0");
  for (size_t i = 1; i < seg.starts.size(); ++i)
    if (seg.starts[i] <= seg.starts[i - 1])
      throw ContractError("segmentation: starts must be strictly increasing");
  if (seg.starts.back() >= seg.total)
    throw ContractError("segmentation: start beyond frame range");
}

void validate_keyshots(const Keyshots& shots, int total_frames) {
  int prev_end = -1;
  for (const Interval& s : shots) {
    if (s.start > s.end) throw ContractError("keyshots: empty interval");
    if (s.start < 0 || s.end >= total_frames) throw ContractError("keyshots: interval out of range");
    if (s.start <= prev_end) throw ContractError("keyshots: intervals overlap or are unsorted");
    prev_end = s.end;
  }
}

int keyshot_duration(const Keyshots& shots) {
  int d = 0;
  for (const Interval& s : shots) d += s.length();
  return d;
}

std::vector<char> keyshot_indicator(const Keyshots& shots, int total_frames) {
  std::vector<char> ind(total_frames, 0);
  for (const Interval& s : shots)
    for (int t = s.start; t <= s.end; ++t) ind[t] = 1;
  return ind;
}

Keyshots keyshots_from_indicator(const std::vector<char>& indicator) {
  Keyshots shots;
  const int n = static_cast<int>(indicator.size());
  int t = 0;
  while (t < n) {
    if (!indicator[t]) {
      ++t;
      continue;
    }
    int end = t;
    while (end + 1 < n && indicator[end + 1]) ++end;
    shots.push_back({t, end});
    t = end + 1;
  }
  return shots;
}

int budget_frames(int total_frames, double fraction) {
  return static_cast<int>(std::floor(fraction * total_frames));
}

// ---------------------------------------------------------------------------
// kernel temporal segmentation

namespace {

struct ScatterTable {
  // prefix[t] = sum of rows x_0..x_{t-1}; sq[t] = sum of squared norms
  std::vector<std::vector<double>> prefix;
  std::vector<double> sq;
  int dim = 0;

  explicit ScatterTable(const linalg::FeatureSequence& x) {
    const int n = x.rows;
    dim = x.cols;
    prefix.assign(n + 1, std::vector<double>(dim, 0.0));
    sq.assign(n + 1, 0.0);
    for (int t = 0; t < n; ++t) {
      double s2 = 0.0;
      for (int c = 0; c < dim; ++c) {
        const double v = x.at(t, c);
        prefix[t + 1][c] = prefix[t][c] + v;
        s2 += v * v;
      }
      sq[t + 1] = sq[t] + s2;
    }
  }

  // within-segment scatter of frames [a, b] inclusive
  double operator()(int a, int b) const {
    const int n = b - a + 1;
    double norm2 = 0.0;
    for (int c = 0; c < dim; ++c) {
      const double s = prefix[b + 1][c] - prefix[a][c];
      norm2 += s * s;
    }
    const double total = sq[b + 1] - sq[a];
    const double scatter = total - norm2 / n;
    // cancellation noise on near-constant segments must read as exactly zero
    if (scatter < 1e-9 * std::max(1.0, total)) return 0.0;
    return scatter;
  }
};

}  // namespace

Segmentation kts_segment(const linalg::FeatureSequence& x, int target_mean_len,
                         int max_segments) {
  const int n = x.rows;
  if (n == 0) throw ContractError("kts_segment: empty feature sequence");
  if (target_mean_len < 1) throw ContractError("kts_segment: target_mean_len must be >= 1");
  if (max_segments < 1) throw ContractError("kts_segment: max_segments must be >= 1");

  const ScatterTable scatter(x);
  const int k_max = std::min(max_segments, n);
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // cost[k][j]: best scatter splitting the first j frames into exactly k segments
  std::vector<std::vector<double>> cost(k_max + 1, std::vector<double>(n + 1, kInf));
  std::vector<std::vector<int>> parent(k_max + 1, std::vector<int>(n + 1, -1));
  cost[0][0] = 0.0;
  for (int k = 1; k <= k_max; ++k) {
    for (int j = k; j <= n; ++j) {
      double best = kInf;
      int best_i = -1;
      for (int i = k - 1; i < j; ++i) {
        if (cost[k - 1][i] == kInf) continue;
        const double c = cost[k - 1][i] + scatter(i, j - 1);
        if (c < best) {
          best = c;
          best_i = i;
        }
      }
      cost[k][j] = best;
      parent[k][j] = best_i;
    }
  }

  auto segments_for_penalty = [&](double penalty) {
    int best_k = 1;
    double best = cost[1][n] + penalty;
    for (int k = 2; k <= k_max; ++k) {
      const double c = cost[k][n] + penalty * k;
      if (c < best) {
        best = c;
        best_k = k;
      }
    }
    return best_k;
  };

  // band of acceptable segment counts: mean length within +-25% of target
  const int band_lo = std::clamp(
      static_cast<int>(std::ceil(static_cast<double>(n) / (1.25 * target_mean_len))), 1, k_max);
  const int band_hi = std::clamp(
      static_cast<int>(std::floor(static_cast<double>(n) / (0.75 * target_mean_len))), band_lo,
      k_max);

  double lo = 0.0;
  double hi = scatter(0, n - 1) + 1.0;  // single segment always wins at this penalty
  int chosen = segments_for_penalty(hi);
  for (int iter = 0; iter < 60; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const int k = segments_for_penalty(mid);
    chosen = k;
    if (k > band_hi)
      lo = mid;  // too many segments: raise the penalty
    else if (k < band_lo)
      hi = mid;
    else
      break;
  }

  Segmentation seg;
  seg.total = n;
  seg.starts.assign(chosen, 0);
  int j = n;
  for (int k = chosen; k >= 1; --k) {
    const int i = parent[k][j];
    seg.starts[k - 1] = i;
    j = i;
  }
  validate(seg);
  return seg;
}

// ---------------------------------------------------------------------------
// knapsack

std::vector<int> knapsack_select(const std::vector<KnapsackItem>& items, int budget) {
  if (budget < 0) throw ContractError("knapsack_select: negative budget");
  for (const KnapsackItem& it : items) {
    if (it.value < 0) throw ContractError("knapsack_select: negative value");
    if (it.duration < 1) throw ContractError("knapsack_select: duration must be >= 1");
  }
  const int n = static_cast<int>(items.size());
  if (n == 0 || budget == 0) return {};

  // best[i][w]: (max value, min duration) over items i..n-1 with capacity w
  std::vector<std::vector<double>> value(n + 1, std::vector<double>(budget + 1, 0.0));
  std::vector<std::vector<int>> used(n + 1, std::vector<int>(budget + 1, 0));
  for (int i = n - 1; i >= 0; --i) {
    for (int w = 0; w <= budget; ++w) {
      double v = value[i + 1][w];
      int d = used[i + 1][w];
      if (items[i].duration <= w) {
        const double v2 = items[i].value + value[i + 1][w - items[i].duration];
        const int d2 = items[i].duration + used[i + 1][w - items[i].duration];
        if (v2 > v || (v2 == v && d2 < d)) {
          v = v2;
          d = d2;
        }
      }
      value[i][w] = v;
      used[i][w] = d;
    }
  }

  // walk forward preferring inclusion: yields the lexicographically smallest
  // index set among (max value, min duration) optima
  std::vector<int> selected;
  int w = budget;
  for (int i = 0; i < n; ++i) {
    if (items[i].duration > w) continue;
    const double v_in = items[i].value + value[i + 1][w - items[i].duration];
    const int d_in = items[i].duration + used[i + 1][w - items[i].duration];
    if (v_in == value[i][w] && d_in == used[i][w]) {
      selected.push_back(i);
      w -= items[i].duration;
    }
  }
  return selected;
}

// ---------------------------------------------------------------------------
// format conversions

std::pair<Keyshots, ImportanceCurve> keyframes_to(const KeyframeSet& keyframes,
                                                  const Segmentation& seg, int budget_frames) {
  validate(seg);
  if (budget_frames < 0) throw ContractError("keyframes_to: negative budget");
  for (int f : keyframes)
    if (f < 0 || f >= seg.total) throw ContractError("keyframes_to: keyframe out of range");

  std::vector<int> counts(seg.count(), 0);
  for (int f : keyframes) {
    const int i =
        static_cast<int>(std::upper_bound(seg.starts.begin(), seg.starts.end(), f) -
                         seg.starts.begin()) -
        1;
    ++counts[i];
  }

  std::vector<int> candidates;
  std::vector<KnapsackItem> items;
  for (int i = 0; i < seg.count(); ++i) {
    if (counts[i] == 0) continue;
    const Interval s = seg.segment(i);
    candidates.push_back(i);
    items.push_back({static_cast<double>(counts[i]) / s.length(), s.length()});
  }

  Keyshots shots;
  for (int pick : knapsack_select(items, budget_frames))
    shots.push_back(seg.segment(candidates[pick]));
  std::sort(shots.begin(), shots.end(),
            [](const Interval& a, const Interval& b) { return a.start < b.start; });

  const std::vector<char> ind = keyshot_indicator(shots, seg.total);
  ImportanceCurve curve(ind.begin(), ind.end());
  return {std::move(shots), std::move(curve)};
}

std::pair<KeyframeSet, ImportanceCurve> keyshots_to(const Keyshots& shots, int total_frames) {
  validate_keyshots(shots, total_frames);
  KeyframeSet keyframes;
  for (const Interval& s : shots) keyframes.push_back((s.start + s.end + 1) / 2);
  const std::vector<char> ind = keyshot_indicator(shots, total_frames);
  ImportanceCurve curve(ind.begin(), ind.end());
  return {std::move(keyframes), std::move(curve)};
}

std::pair<Keyshots, KeyframeSet> scores_to(const ImportanceCurve& scores,
                                           const Segmentation& seg, int budget_frames) {
  validate(seg);
  if (static_cast<int>(scores.size()) != seg.total)
    throw ShapeError("scores_to: curve length does not match segmentation range");
  if (budget_frames < 0) throw ContractError("scores_to: negative budget");

  std::vector<KnapsackItem> items(seg.count());
  for (int i = 0; i < seg.count(); ++i) {
    const Interval s = seg.segment(i);
    double mean = 0.0;
    for (int t = s.start; t <= s.end; ++t) mean += scores[t];
    items[i] = {mean / s.length(), s.length()};
  }

  std::vector<int> picks = knapsack_select(items, budget_frames);
  std::sort(picks.begin(), picks.end());

  Keyshots shots;
  KeyframeSet keyframes;
  for (int i : picks) {
    const Interval s = seg.segment(i);
    shots.push_back(s);
    int best = s.start;
    for (int t = s.start + 1; t <= s.end; ++t)
      if (scores[t] > scores[best]) best = t;
    keyframes.push_back(best);
  }
  return {std::move(shots), std::move(keyframes)};
}

}  // namespace vsum::temporal
