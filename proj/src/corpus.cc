#include "mpager/corpus.h"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mpager/textnorm.h"

namespace mpager {
namespace {

using ordered_json = nlohmann::ordered_json;

std::string JoinLines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) {
    if (!out.empty()) out.push_back('\n');
    out += l;
  }
  return out;
}

std::string At(size_t line_no) { return "line " + std::to_string(line_no) + ": "; }

std::ifstream OpenForRead(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError({"cannot open " + path.string()});
  return in;
}

std::ofstream OpenForWrite(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CorpusError({"cannot write " + path.string()});
  return out;
}

bool GetLine(std::istream& in, std::string* line) {
  if (!std::getline(in, *line)) return false;
  if (!line->empty() && line->back() == '\r') line->pop_back();
  return true;
}

std::string_view TrimWhitespace(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

}  // namespace

CorpusError::CorpusError(std::vector<std::string> problems)
    : std::runtime_error(JoinLines(problems)), problems_(std::move(problems)) {}

const HypothesisEntry* HypothesisSet::Find(std::string_view system, int rank) const {
  for (const auto& e : entries) {
    if (e.system == system && e.rank == rank) return &e;
  }
  return nullptr;
}

std::vector<std::string> HypothesisSet::Problems() const {
  std::vector<std::string> problems;
  std::set<std::pair<std::string, int>> seen;
  std::set<std::string> systems, with_first;
  for (const auto& e : entries) {
    if (e.rank < 1) {
      problems.push_back(utt_id + ": rank must be positive for system " + e.system);
    }
    if (!seen.emplace(e.system, e.rank).second) {
      problems.push_back(utt_id + ": duplicate entry for " + e.system + "@" + std::to_string(e.rank));
    }
    systems.insert(e.system);
    if (e.rank == 1) with_first.insert(e.system);
  }
  for (const auto& s : systems) {
    if (!with_first.count(s)) problems.push_back(utt_id + ": system " + s + " has no rank-1 entry");
  }
  return problems;
}

Utterance& Corpus::Add(std::string utt_id) {
  if (index_.count(utt_id)) throw CorpusError({"duplicate utterance id " + utt_id});
  index_.emplace(utt_id, utterances_.size());
  Utterance& u = utterances_.emplace_back();
  u.hypotheses.utt_id = utt_id;
  u.utt_id = std::move(utt_id);
  return u;
}

Utterance* Corpus::Find(std::string_view utt_id) {
  auto it = index_.find(utt_id);
  return it == index_.end() ? nullptr : &utterances_[it->second];
}

const Utterance* Corpus::Find(std::string_view utt_id) const {
  auto it = index_.find(utt_id);
  return it == index_.end() ? nullptr : &utterances_[it->second];
}

bool Corpus::HasSystem(std::string_view system) const {
  for (const auto& u : utterances_) {
    for (const auto& e : u.hypotheses.entries) {
      if (e.system == system) return true;
    }
  }
  return false;
}

Corpus ReadJsonl(std::istream& in) {
  Corpus corpus;
  std::vector<std::string> problems;
  std::map<std::pair<std::string, std::pair<std::string, int>>, size_t> first_line;
  std::string line;
  size_t line_no = 0;
  while (GetLine(in, &line)) {
    ++line_no;
    if (TrimWhitespace(line).empty()) continue;
    ordered_json record;
    try {
      record = ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      problems.push_back(At(line_no) + "malformed JSON (" + e.what() + ")");
      continue;
    }
    if (!record.is_object()) {
      problems.push_back(At(line_no) + "record is not a JSON object");
      continue;
    }
    auto string_field = [&](const char* key) -> std::optional<std::string> {
      auto it = record.find(key);
      if (it == record.end() || it->is_null()) return std::nullopt;
      if (!it->is_string()) throw std::invalid_argument(std::string("field \"") + key + "\" must be a string");
      return it->get<std::string>();
    };
    try {
      auto utt_id = string_field("utt_id");
      if (!utt_id || utt_id->empty()) {
        problems.push_back(At(line_no) + "missing utt_id");
        continue;
      }
      const auto system = string_field("system");
      const auto text = string_field("text");
      const auto reference = string_field("reference");
      std::optional<int> rank;
      if (auto it = record.find("rank"); it != record.end()) {
        if (!it->is_number_integer()) throw std::invalid_argument("field \"rank\" must be an integer");
        rank = it->get<int>();
        if (*rank < 1) throw std::invalid_argument("rank must be positive");
      }
      std::optional<double> score;
      if (auto it = record.find("score"); it != record.end() && !it->is_null()) {
        if (!it->is_number()) throw std::invalid_argument("field \"score\" must be a number");
        score = it->get<double>();
      }
      if (!system && !reference) throw std::invalid_argument("record has neither system nor reference");
      if (system && !text) throw std::invalid_argument("hypothesis record is missing text");
      if (!system && (text || rank || score)) {
        throw std::invalid_argument("hypothesis fields given without a system");
      }

      Utterance* utt = corpus.Find(*utt_id);
      if (utt == nullptr) utt = &corpus.Add(*utt_id);
      if (reference) {
        if (utt->reference && *utt->reference != *reference) {
          throw std::invalid_argument("conflicting reference for " + *utt_id);
        }
        utt->reference = *reference;
      }
      if (system) {
        const int r = rank.value_or(1);
        auto key = std::make_pair(*utt_id, std::make_pair(*system, r));
        if (auto it = first_line.find(key); it != first_line.end()) {
          problems.push_back(At(line_no) + "duplicate (utt_id, system, rank) = (" + *utt_id + ", " +
                             *system + ", " + std::to_string(r) + "), first seen on line " +
                             std::to_string(it->second));
          continue;
        }
        first_line.emplace(std::move(key), line_no);
        utt->hypotheses.entries.push_back(HypothesisEntry{*system, r, *text, score});
      }
    } catch (const std::exception& e) {
      problems.push_back(At(line_no) + e.what());
    }
  }
  for (const auto& u : corpus.utterances()) {
    for (auto& p : u.hypotheses.Problems()) problems.push_back(std::move(p));
  }
  if (!problems.empty()) throw CorpusError(std::move(problems));
  return corpus;
}

Corpus LoadJsonl(const std::filesystem::path& path) {
  auto in = OpenForRead(path);
  return ReadJsonl(in);
}

void WriteJsonl(const Corpus& corpus, std::ostream& out) {
  for (const auto& u : corpus.utterances()) {
    if (u.reference) {
      ordered_json j;
      j["utt_id"] = u.utt_id;
      j["reference"] = *u.reference;
      out << j.dump() << '\n';
    }
    for (const auto& e : u.hypotheses.entries) {
      ordered_json j;
      j["utt_id"] = u.utt_id;
      j["system"] = e.system;
      j["rank"] = e.rank;
      j["text"] = e.text;
      if (e.score) j["score"] = *e.score;
      out << j.dump() << '\n';
    }
  }
}

void SaveJsonl(const Corpus& corpus, const std::filesystem::path& path) {
  auto out = OpenForWrite(path);
  WriteJsonl(corpus, out);
}

TrnRecord ParseTrnLine(std::string_view line) {
  const std::string_view trimmed = TrimWhitespace(line);
  if (trimmed.empty() || trimmed.back() != ')') {
    throw std::invalid_argument("missing trailing (utt_id)");
  }
  const auto open = trimmed.rfind('(');
  if (open == std::string_view::npos) throw std::invalid_argument("missing trailing (utt_id)");
  const std::string_view id = trimmed.substr(open + 1, trimmed.size() - open - 2);
  if (id.empty() || id.find_first_of(" \t()") != std::string_view::npos) {
    throw std::invalid_argument("invalid utterance id \"" + std::string(id) + "\"");
  }
  if (open > 0 && trimmed[open - 1] != ' ' && trimmed[open - 1] != '\t') {
    throw std::invalid_argument("utterance id must be separated from the text by whitespace");
  }
  const std::string_view text = TrimWhitespace(trimmed.substr(0, open));
  if (!IsValidUtf8(text)) throw std::invalid_argument("invalid UTF-8");
  return TrnRecord{std::string(id), std::string(text)};
}

std::vector<TrnRecord> ReadTrn(std::istream& in) {
  std::vector<TrnRecord> records;
  std::vector<std::string> problems;
  std::map<std::string, size_t> seen;
  std::string line;
  size_t line_no = 0;
  while (GetLine(in, &line)) {
    ++line_no;
    if (TrimWhitespace(line).empty()) continue;
    try {
      TrnRecord r = ParseTrnLine(line);
      if (auto [it, inserted] = seen.emplace(r.utt_id, line_no); !inserted) {
        problems.push_back(At(line_no) + "duplicate utterance id " + r.utt_id +
                           ", first seen on line " + std::to_string(it->second));
        continue;
      }
      records.push_back(std::move(r));
    } catch (const std::invalid_argument& e) {
      problems.push_back(At(line_no) + e.what());
    }
  }
  if (!problems.empty()) throw CorpusError(std::move(problems));
  return records;
}

std::vector<TrnRecord> LoadTrn(const std::filesystem::path& path) {
  auto in = OpenForRead(path);
  try {
    return ReadTrn(in);
  } catch (const CorpusError& e) {
    std::vector<std::string> problems;
    for (const auto& p : e.problems()) problems.push_back(path.string() + ": " + p);
    throw CorpusError(std::move(problems));
  }
}

void WriteTrn(const std::vector<TrnRecord>& records, std::ostream& out) {
  for (const auto& r : records) {
    if (!r.text.empty()) out << r.text << ' ';
    out << '(' << r.utt_id << ")\n";
  }
}

void SaveTrn(const std::vector<TrnRecord>& records, const std::filesystem::path& path) {
  auto out = OpenForWrite(path);
  WriteTrn(records, out);
}

void AttachReferences(Corpus* corpus, const std::vector<TrnRecord>& references) {
  std::vector<std::string> problems;
  for (const auto& r : references) {
    Utterance* u = corpus->Find(r.utt_id);
    if (u == nullptr) {
      problems.push_back("reference for unknown utterance " + r.utt_id);
    } else if (u->reference && *u->reference != r.text) {
      problems.push_back("conflicting reference for " + r.utt_id);
    } else {
      u->reference = r.text;
    }
  }
  if (!problems.empty()) throw CorpusError(std::move(problems));
}

StreamSpec StreamSpec::Parse(std::string_view text) {
  StreamSpec spec;
  const auto at = text.rfind('@');
  if (at == std::string_view::npos) {
    spec.system = std::string(text);
  } else {
    spec.system = std::string(text.substr(0, at));
    const std::string rank(text.substr(at + 1));
    size_t used = 0;
    int value = 0;
    try {
      value = std::stoi(rank, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (rank.empty() || used != rank.size() || value < 1) {
      throw std::invalid_argument("invalid rank in stream specifier \"" + std::string(text) + "\"");
    }
    spec.rank = value;
  }
  if (spec.system.empty()) {
    throw std::invalid_argument("empty system in stream specifier \"" + std::string(text) + "\"");
  }
  return spec;
}

std::string StreamSpec::ToString() const { return system + "@" + std::to_string(rank); }

StreamSelection SelectStreams(const Corpus& corpus, const std::vector<StreamSpec>& scheme,
                              MissingStreamPolicy policy) {
  if (scheme.empty()) throw CorpusError({"stream scheme is empty"});
  std::vector<std::string> problems;
  for (const auto& spec : scheme) {
    if (!corpus.HasSystem(spec.system)) {
      problems.push_back("stream " + spec.ToString() + " does not resolve: no system \"" +
                         spec.system + "\" in corpus");
    }
  }
  if (!problems.empty()) throw CorpusError(std::move(problems));

  StreamSelection selection;
  for (const auto& u : corpus.utterances()) {
    CandidateList list{u.utt_id, {}};
    std::vector<std::string> missing;
    for (const auto& spec : scheme) {
      const HypothesisEntry* e = u.hypotheses.Find(spec.system, spec.rank);
      if (e == nullptr) {
        missing.push_back(spec.ToString());
      } else {
        list.candidates.push_back(e->text);
      }
    }
    if (missing.empty()) {
      selection.lists.push_back(std::move(list));
    } else if (policy == MissingStreamPolicy::kSkipUtterance) {
      selection.skipped.push_back(u.utt_id);
    } else {
      for (const auto& m : missing) problems.push_back(u.utt_id + ": missing stream " + m);
    }
  }
  if (!problems.empty()) throw CorpusError(std::move(problems));
  return selection;
}

}  // namespace mpager
