#ifndef MPAGER_CORPUS_H_
#define MPAGER_CORPUS_H_

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mpager {

// Load/validation failure. what() lists every problem, one per line, with
// 1-based line numbers where they apply.
class CorpusError : public std::runtime_error {
 public:
  explicit CorpusError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

struct HypothesisEntry {
  std::string system;
  int rank = 1;
  std::string text;
  std::optional<double> score;

  bool operator==(const HypothesisEntry&) const = default;
};

// Candidates for one utterance. Covers both an N-best list from one system
// and 1-bests from several systems.
struct HypothesisSet {
  std::string utt_id;
  std::vector<HypothesisEntry> entries;

  const HypothesisEntry* Find(std::string_view system, int rank) const;
  // Returns problems: duplicate (system, rank), non-positive rank, system
  // without a rank-1 entry.
  std::vector<std::string> Problems() const;

  bool operator==(const HypothesisSet&) const = default;
};

struct Utterance {
  std::string utt_id;
  std::optional<std::string> reference;
  HypothesisSet hypotheses;

  bool operator==(const Utterance&) const = default;
};

class Corpus {
 public:
  // Appends a new utterance; throws CorpusError on a duplicate id.
  Utterance& Add(std::string utt_id);
  Utterance* Find(std::string_view utt_id);
  const Utterance* Find(std::string_view utt_id) const;

  const std::vector<Utterance>& utterances() const { return utterances_; }
  std::vector<Utterance>& utterances() { return utterances_; }
  size_t size() const { return utterances_.size(); }
  bool HasSystem(std::string_view system) const;

  bool operator==(const Corpus& o) const { return utterances_ == o.utterances_; }

 private:
  std::vector<Utterance> utterances_;
  std::map<std::string, size_t, std::less<>> index_;
};

// JSONL: one object per line. Hypothesis lines carry "utt_id", "system",
// "rank", "text" and optionally "score" and "reference"; reference-only
// lines carry "utt_id" and "reference". Utterances keep first-seen order.
Corpus ReadJsonl(std::istream& in);
Corpus LoadJsonl(const std::filesystem::path& path);
void WriteJsonl(const Corpus& corpus, std::ostream& out);
void SaveJsonl(const Corpus& corpus, const std::filesystem::path& path);

// SCTK trn: "text (utt_id)" per line.
struct TrnRecord {
  std::string utt_id;
  std::string text;

  bool operator==(const TrnRecord&) const = default;
};

TrnRecord ParseTrnLine(std::string_view line);  // throws std::invalid_argument
std::vector<TrnRecord> ReadTrn(std::istream& in);
std::vector<TrnRecord> LoadTrn(const std::filesystem::path& path);
void WriteTrn(const std::vector<TrnRecord>& records, std::ostream& out);
void SaveTrn(const std::vector<TrnRecord>& records, const std::filesystem::path& path);

// Sets references from trn records. Every record must name a corpus
// utterance and must not contradict an existing reference.
void AttachReferences(Corpus* corpus, const std::vector<TrnRecord>& references);

// "system@rank"; a bare "system" means rank 1.
struct StreamSpec {
  std::string system;
  int rank = 1;

  static StreamSpec Parse(std::string_view text);
  std::string ToString() const;
  bool operator==(const StreamSpec&) const = default;
};

enum class MissingStreamPolicy { kError, kSkipUtterance };

struct CandidateList {
  std::string utt_id;
  std::vector<std::string> candidates;  // in scheme order
};

struct StreamSelection {
  std::vector<CandidateList> lists;
  std::vector<std::string> skipped;  // utterances dropped under kSkipUtterance
};

// Resolves `scheme` for every utterance. Throws CorpusError when a stream
// names a system absent from the whole corpus, or (under kError) when an
// utterance lacks a stream.
StreamSelection SelectStreams(const Corpus& corpus, const std::vector<StreamSpec>& scheme,
                              MissingStreamPolicy policy = MissingStreamPolicy::kError);

}  // namespace mpager

#endif  // MPAGER_CORPUS_H_
