#include "vsum/eval_metrics.hpp"

namespace vsum::eval {

double f_from_pr(double precision, double recall) {
  const double denom = precision + recall;
  if (denom == 0.0) return 0.0;
  return 2.0 * precision * recall / denom * 100.0;
}

EvalReport overlap_prf(const temporal::Keyshots& a, const temporal::Keyshots& b,
                       int total_frames) {
  temporal::validate_keyshots(a, total_frames);
  temporal::validate_keyshots(b, total_frames);
  const std::vector<char> ia = temporal::keyshot_indicator(a, total_frames);
  const std::vector<char> ib = temporal::keyshot_indicator(b, total_frames);
  int overlap = 0;
  for (int t = 0; t < total_frames; ++t) overlap += (ia[t] && ib[t]) ? 1 : 0;

  const int dur_a = temporal::keyshot_duration(a);
  const int dur_b = temporal::keyshot_duration(b);
  EvalReport r;
  r.precision = dur_a > 0 ? static_cast<double>(overlap) / dur_a : 0.0;
  r.recall = dur_b > 0 ? static_cast<double>(overlap) / dur_b : 0.0;
  r.f_score = f_from_pr(r.precision, r.recall);
  return r;
}

EvalReport eval_multi_user(const temporal::Keyshots& candidate,
                           const std::vector<temporal::Keyshots>& refs, int total_frames,
                           AggMode mode) {
  if (refs.empty()) throw ContractError("eval_multi_user: no reference summaries");
  EvalReport agg;
  agg.per_user.reserve(refs.size());
  for (const temporal::Keyshots& ref : refs)
    agg.per_user.push_back(overlap_prf(candidate, ref, total_frames));

  if (mode == AggMode::Max) {
    const EvalReport* best = &agg.per_user.front();
    for (const EvalReport& r : agg.per_user)
      if (r.f_score > best->f_score) best = &r;
    agg.precision = best->precision;
    agg.recall = best->recall;
    agg.f_score = best->f_score;
  } else {
    for (const EvalReport& r : agg.per_user) {
      agg.precision += r.precision;
      agg.recall += r.recall;
      agg.f_score += r.f_score;
    }
    const double n = static_cast<double>(agg.per_user.size());
    agg.precision /= n;
    agg.recall /= n;
    agg.f_score /= n;
  }
  return agg;
}

}  // namespace vsum::eval
