#ifndef MPAGER_SCORING_H_
#define MPAGER_SCORING_H_

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mpager/alignment.h"
#include "mpager/textnorm.h"

namespace mpager {

class ScoringError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct UtteranceScore {
  std::string utt_id;
  EditCounts counts;
  // Reference was empty after normalization: the record is reported but
  // left out of corpus aggregation.
  bool empty_reference = false;

  std::optional<double> cer() const;
};

struct CerReport {
  std::vector<UtteranceScore> per_utterance;
  EditCounts totals;       // over non-flagged records only
  double corpus_cer = 0.0; // errors(totals) / totals.ref_len
  std::vector<std::string> excluded;  // utt ids with an empty reference
};

// Normalizes both sides, tokenizes and aligns. Throws Utf8Error.
UtteranceScore ScorePair(std::string utt_id, std::string_view ref, std::string_view hyp,
                         const NormalizationOptions& norm, TokenMode mode = TokenMode::kChar);

// Aggregates error counts over total reference length. Throws ScoringError
// when no record has a non-empty reference.
CerReport CorpusCer(std::vector<UtteranceScore> records);

struct LengthBucket {
  size_t first_len = 0;  // inclusive
  size_t last_len = 0;   // inclusive
  size_t utterances = 0;
  EditCounts totals;
  std::optional<double> cer;  // absent when the bucket holds no scorable record
};

struct BucketReport {
  size_t bucket_width = 10;
  std::vector<LengthBucket> buckets;
};

// Record with reference length L goes to bucket floor(L / width). Buckets
// cover [0, max length] contiguously, empty ones included.
BucketReport MakeBucketReport(std::span<const UtteranceScore> records, size_t bucket_width = 10);

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p_two_sided = 1.0;
  double mean_difference = 0.0;
  size_t n = 0;
};

class StatisticsError : public std::invalid_argument {
 public:
  enum class Kind { kLengthMismatch, kTooFewSamples, kZeroVariance };
  StatisticsError(Kind kind, const std::string& what) : std::invalid_argument(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Paired two-sided Student t-test on d = a - b.
TTestResult PairedTTest(std::span<const double> a, std::span<const double> b);

enum class PairedMetric { kCer, kErrors };

// Pairs two reports by utterance id and extracts the chosen metric. Records
// flagged in either report are skipped. Throws ScoringError when the id sets
// differ.
void PairReports(const CerReport& a, const CerReport& b, PairedMetric metric,
                 std::vector<double>* values_a, std::vector<double>* values_b);

// Regularized incomplete beta I_x(a, b).
double RegularizedIncompleteBeta(double a, double b, double x);

// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
double StudentTTwoSidedP(double t, double df);

}  // namespace mpager

#endif  // MPAGER_SCORING_H_
