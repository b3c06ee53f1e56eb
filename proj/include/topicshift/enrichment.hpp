#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "topicshift/corpus.hpp"

namespace topicshift {

/// Longest allowed turn information, in text::length_units.
inline constexpr std::size_t kMaxTurnInfoUnits = 10;
/// Last-resort keyword when a block has no usable token.
inline constexpr std::string_view kFallbackKeyword = "topic";

struct KeywordCandidate {
  std::string term;
  double confidence = 0.0;  // in [0, 1]
};

struct RoleSpan {
  std::string text;
  std::size_t start = 0;  // byte offsets into the utterance
  std::size_t end = 0;
};

struct SrlTuple {
  std::string predicate;
  std::map<std::string, RoleSpan> roles;  // tag -> span
  std::size_t start = 0;
  std::size_t end = 0;
};

enum class TurnInfoSource { A1, Predicate, Fallback };
std::string_view turn_info_source_name(TurnInfoSource source);

struct TurnInfo {
  std::size_t utterance_index = 0;
  std::string info;
  TurnInfoSource provenance = TurnInfoSource::Fallback;
};

// ---------------------------------------------------------------------------
// Provider plug-ins

class KeywordProvider {
 public:
  virtual ~KeywordProvider() = default;
  virtual std::string name() const = 0;
  /// Ranked candidates, confidence descending.
  virtual std::vector<KeywordCandidate> candidates(std::string_view block_text,
                                                   Language language) const = 0;
  /// False when the provider must not be called from several threads at once.
  virtual bool concurrent() const { return true; }
};

class SrlProvider {
 public:
  virtual ~SrlProvider() = default;
  virtual std::string name() const = 0;
  virtual std::vector<SrlTuple> extract(std::string_view utterance, Language language) const = 0;
  virtual bool concurrent() const { return true; }
};

/// Reference keyword extractor: unigrams and bigrams of non-stopword terms
/// scored by frequency x inverse block frequency, normalised by the top
/// score. Before fit() every term has unit weight.
class FrequencyKeywordProvider final : public KeywordProvider {
 public:
  std::string name() const override { return "frequency"; }
  std::vector<KeywordCandidate> candidates(std::string_view block_text,
                                           Language language) const override;

  /// Learns smoothed inverse document frequencies over block texts.
  void fit(std::span<const std::string> block_texts, Language language);

 private:
  double weight(const std::string& term) const;

  std::unordered_map<std::string, double> idf_;
  double unseen_idf_ = 1.0;
};

/// Low-fidelity reference SRL: emits at most one tuple per utterance. Each
/// clause is scanned for a verb from a small lexicon; a copula takes the
/// span before it as A1, any other verb the span after it. The longest A1
/// across clauses wins.
class HeuristicSrlProvider final : public SrlProvider {
 public:
  std::string name() const override { return "heuristic"; }
  std::vector<SrlTuple> extract(std::string_view utterance, Language language) const override;
};

/// Candidates read from JSONL records `{"text": ..., "candidates": [{"term", "confidence"}]}`.
class PrecomputedKeywordProvider final : public KeywordProvider {
 public:
  explicit PrecomputedKeywordProvider(const std::filesystem::path& path);
  std::string name() const override { return "precomputed"; }
  std::vector<KeywordCandidate> candidates(std::string_view block_text,
                                           Language language) const override;

 private:
  std::unordered_map<std::string, std::vector<KeywordCandidate>> table_;
};

/// Tuples read from JSONL records `{"text": ..., "tuples": [<SrlTuple JSON>]}`.
class PrecomputedSrlProvider final : public SrlProvider {
 public:
  explicit PrecomputedSrlProvider(const std::filesystem::path& path);
  std::string name() const override { return "precomputed"; }
  std::vector<SrlTuple> extract(std::string_view utterance, Language language) const override;

 private:
  std::unordered_map<std::string, std::vector<SrlTuple>> table_;
};

/// "frequency" or "precomputed:<path>".
std::unique_ptr<KeywordProvider> make_keyword_provider(std::string_view spec);
/// "heuristic" or "precomputed:<path>".
std::unique_ptr<SrlProvider> make_srl_provider(std::string_view spec);

/// Parses the provider JSON record for one tuple. Role tags ARG0/ARG1 are
/// normalised to A0/A1. Throws ParseError on schema violations.
SrlTuple srl_tuple_from_json(std::string_view json_text);
std::string srl_tuple_to_json(const SrlTuple& tuple);

/// Drops tuples without roles; throws ValidationError when a span leaves the utterance.
std::vector<SrlTuple> ingest_tuples(std::string_view utterance, std::vector<SrlTuple> tuples);

// ---------------------------------------------------------------------------
// Topic-level keywords

std::vector<KeywordCandidate> keyword_candidates(const KeywordProvider& provider,
                                                 std::string_view block_text, Language language);

/// Most frequent non-stopword token of the block not in `excluded` (ties go
/// to the earliest occurrence); otherwise "topic", suffixed with a counter
/// if that is excluded too.
std::string fallback_keyword(const TopicBlock& block, const Dialogue& dialogue,
                             const std::set<std::string>& excluded = {});

/// Fills every block's keyword. Blocks are served in descending order of
/// their top candidate's confidence (ties: lower index first); each takes its
/// best candidate not already held by an adjacent block. Blocks left without
/// a candidate receive fallback_keyword and needs_review = true.
std::vector<TopicBlock> assign_block_keywords(
    const Dialogue& dialogue, std::vector<TopicBlock> blocks,
    std::span<const std::vector<KeywordCandidate>> candidates);

// ---------------------------------------------------------------------------
// Turn-level information

/// Tags kept by the core-semantics rule.
bool is_core_role(std::string_view tag);

/// Rule 1: keep only A0 / A1 roles. Rule 2: remove tuples whose span sits
/// inside another surviving tuple's span (identical spans keep the first).
std::vector<SrlTuple> filter_tuples(std::vector<SrlTuple> tuples);

/// Applies both filter rules, then picks the longest A1, else the longest
/// predicate, else falls back to the first content tokens of the utterance.
TurnInfo select_turn_info(const Utterance& utterance, Language language,
                          std::span<const SrlTuple> tuples);

}  // namespace topicshift
