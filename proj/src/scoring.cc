#include "mpager/scoring.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace mpager {

std::optional<double> UtteranceScore::cer() const {
  if (empty_reference || counts.ref_len == 0) return std::nullopt;
  return static_cast<double>(counts.errors()) / static_cast<double>(counts.ref_len);
}

UtteranceScore ScorePair(std::string utt_id, std::string_view ref, std::string_view hyp,
                         const NormalizationOptions& norm, TokenMode mode) {
  const auto ref_tokens = Tokenize(Normalize(ref, norm), mode);
  const auto hyp_tokens = Tokenize(Normalize(hyp, norm), mode);
  UtteranceScore score;
  score.utt_id = std::move(utt_id);
  score.counts = CountEdits(Align(ref_tokens, hyp_tokens));
  score.empty_reference = ref_tokens.empty();
  return score;
}

CerReport CorpusCer(std::vector<UtteranceScore> records) {
  CerReport report;
  for (const auto& r : records) {
    if (r.empty_reference) {
      report.excluded.push_back(r.utt_id);
    } else {
      report.totals += r.counts;
    }
  }
  if (report.totals.ref_len == 0) {
    throw ScoringError("corpus has no utterance with a non-empty reference");
  }
  report.corpus_cer =
      static_cast<double>(report.totals.errors()) / static_cast<double>(report.totals.ref_len);
  report.per_utterance = std::move(records);
  return report;
}

BucketReport MakeBucketReport(std::span<const UtteranceScore> records, size_t bucket_width) {
  if (bucket_width == 0) throw std::invalid_argument("bucket width must be positive");
  BucketReport report;
  report.bucket_width = bucket_width;
  size_t max_len = 0;
  for (const auto& r : records) max_len = std::max(max_len, r.counts.ref_len);
  const size_t n_buckets = records.empty() ? 0 : max_len / bucket_width + 1;
  report.buckets.resize(n_buckets);
  for (size_t k = 0; k < n_buckets; ++k) {
    report.buckets[k].first_len = k * bucket_width;
    report.buckets[k].last_len = (k + 1) * bucket_width - 1;
  }
  for (const auto& r : records) {
    auto& bucket = report.buckets[r.counts.ref_len / bucket_width];
    ++bucket.utterances;
    if (!r.empty_reference) bucket.totals += r.counts;
  }
  for (auto& bucket : report.buckets) {
    if (bucket.totals.ref_len > 0) {
      bucket.cer = static_cast<double>(bucket.totals.errors()) /
                   static_cast<double>(bucket.totals.ref_len);
    }
  }
  return report;
}

namespace {

// Continued fraction for I_x(a, b) by the modified Lentz method.
double BetaContinuedFraction(double a, double b, double x) {
  constexpr int kMaxIterations = 10000;
  constexpr double kEpsilon = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEpsilon) return h;
  }
  return h;
}

}  // namespace

double RegularizedIncompleteBeta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("beta parameters must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("x must lie in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  // The continued fraction converges fastest for x < (a + 1) / (a + b + 2).
  if (x < (a + 1.0) / (a + b + 2.0)) return front * BetaContinuedFraction(a, b, x) / a;
  return 1.0 - front * BetaContinuedFraction(b, a, 1.0 - x) / b;
}

double StudentTTwoSidedP(double t, double df) {
  if (!(df > 0.0)) throw std::invalid_argument("degrees of freedom must be positive");
  if (std::isinf(t)) return 0.0;
  return RegularizedIncompleteBeta(df / 2.0, 0.5, df / (df + t * t));
}

TTestResult PairedTTest(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw StatisticsError(StatisticsError::Kind::kLengthMismatch,
                          "paired samples differ in length: " + std::to_string(a.size()) +
                              " vs " + std::to_string(b.size()));
  }
  const size_t n = a.size();
  if (n < 2) {
    throw StatisticsError(StatisticsError::Kind::kTooFewSamples,
                          "paired t-test needs at least 2 pairs");
  }
  double mean = 0.0;
  for (size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  double max_abs = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double dev = (a[i] - b[i]) - mean;
    ss += dev * dev;
    max_abs = std::max(max_abs, std::fabs(a[i] - b[i]));
  }
  // Differences equal up to rounding count as constant.
  if (std::sqrt(ss / static_cast<double>(n)) <= 1e-12 * max_abs || ss == 0.0) {
    throw StatisticsError(StatisticsError::Kind::kZeroVariance,
                          "differences have zero variance; t statistic is undefined");
  }
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  TTestResult r;
  r.n = n;
  r.df = static_cast<double>(n - 1);
  r.mean_difference = mean;
  r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  r.p_two_sided = StudentTTwoSidedP(r.t, r.df);
  return r;
}

void PairReports(const CerReport& a, const CerReport& b, PairedMetric metric,
                 std::vector<double>* values_a, std::vector<double>* values_b) {
  std::map<std::string, const UtteranceScore*> by_id;
  for (const auto& r : b.per_utterance) by_id[r.utt_id] = &r;
  if (by_id.size() != a.per_utterance.size() || b.per_utterance.size() != a.per_utterance.size()) {
    throw ScoringError("reports cover different utterance sets");
  }
  auto value = [metric](const UtteranceScore& s) {
    return metric == PairedMetric::kCer ? *s.cer() : static_cast<double>(s.counts.errors());
  };
  values_a->clear();
  values_b->clear();
  for (const auto& ra : a.per_utterance) {
    auto it = by_id.find(ra.utt_id);
    if (it == by_id.end()) throw ScoringError("utterance " + ra.utt_id + " missing from report");
    const UtteranceScore& rb = *it->second;
    if (!ra.cer() || !rb.cer()) continue;
    values_a->push_back(value(ra));
    values_b->push_back(value(rb));
  }
}

}  // namespace mpager
