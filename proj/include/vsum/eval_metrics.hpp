#pragma once

#include <vector>

#include "vsum/temporal.hpp"

namespace vsum::eval {

enum class AggMode { Mean, Max };

struct EvalReport {
  double precision = 0.0;       // in [0, 1]
  double recall = 0.0;          // in [0, 1]
  double f_score = 0.0;         // percent, in [0, 100]
  std::vector<EvalReport> per_user;  // filled by multi-reference aggregation
};

double f_from_pr(double precision, double recall);

// Temporal-overlap precision/recall/F between a candidate summary A and a
// reference B: P = |A n B| / |A|, R = |A n B| / |B| (a zero-duration side
// makes its ratio 0), F = 2PR/(P+R) * 100.
EvalReport overlap_prf(const temporal::Keyshots& a, const temporal::Keyshots& b,
                       int total_frames);

// Scores the candidate against every reference and aggregates. Mean averages
// P, R and F across references; Max reports the best-F reference's numbers.
EvalReport eval_multi_user(const temporal::Keyshots& candidate,
                           const std::vector<temporal::Keyshots>& refs, int total_frames,
                           AggMode mode);

}  // namespace vsum::eval
