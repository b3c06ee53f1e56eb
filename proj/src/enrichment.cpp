#include "topicshift/enrichment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include <json.hpp>

#include "topicshift/error.hpp"

namespace topicshift {

using nlohmann::json;

std::string_view turn_info_source_name(TurnInfoSource source) {
  switch (source) {
    case TurnInfoSource::A1: return "A1";
    case TurnInfoSource::Predicate: return "predicate";
    case TurnInfoSource::Fallback: return "fallback";
  }
  return "fallback";
}

namespace {

bool is_number(std::string_view s) {
  return !s.empty() &&
         std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

// Token with its byte range in the source string.
struct Piece {
  std::string text;
  std::size_t start = 0;
  std::size_t end = 0;
  bool punct = false;
};

std::vector<Piece> pieces_with_offsets(std::string_view s, Language language) {
  std::vector<Piece> out;
  std::size_t i = 0;
  Piece word;
  bool in_word = false;
  auto flush = [&] {
    if (in_word) out.push_back(word);
    in_word = false;
    word = Piece{};
  };
  const auto chars = text::utf8_chars(s);
  for (const auto& ch : chars) {
    const std::size_t begin = i;
    i += ch.size();
    if (text::is_space(ch)) {
      flush();
      continue;
    }
    const bool punct = text::is_punctuation(ch) && ch != "'";
    const bool cjk = ch.size() > 1 && language == Language::Chinese;
    if (punct || cjk) {
      flush();
      out.push_back(Piece{ch, begin, i, punct});
      continue;
    }
    if (!in_word) {
      in_word = true;
      word.start = begin;
    }
    word.text += ch;
    word.end = i;
  }
  flush();
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// FrequencyKeywordProvider

namespace {

struct TermStat {
  std::string term;
  std::size_t count = 0;
  std::size_t first = 0;
  bool bigram = false;
};

std::vector<TermStat> count_terms(std::string_view block_text, Language language) {
  std::vector<TermStat> stats;
  std::unordered_map<std::string, std::size_t> slot;
  auto bump = [&](std::string term, std::size_t pos, bool bigram) {
    auto [it, inserted] = slot.emplace(term, stats.size());
    if (inserted) stats.push_back(TermStat{std::move(term), 0, pos, bigram});
    ++stats[it->second].count;
  };

  const auto tokens = text::tokenize(text::to_lower_ascii(block_text), language);
  std::string previous;  // previous content term, empty after a break
  for (std::size_t pos = 0; pos < tokens.size(); ++pos) {
    const std::string& tok = tokens[pos];
    const auto chars = text::utf8_chars(tok);
    const bool content = !(chars.size() == 1 && text::is_punctuation(chars[0])) &&
                         !is_number(tok) && tok.find_first_not_of('\'') != std::string::npos &&
                         !text::is_stopword(tok, language);
    if (!content) {
      previous.clear();
      continue;
    }
    bump(tok, pos, false);
    if (!previous.empty()) {
      bump(language == Language::English ? previous + " " + tok : previous + tok, pos - 1, true);
    }
    previous = tok;
  }
  return stats;
}

}  // namespace

void FrequencyKeywordProvider::fit(std::span<const std::string> block_texts, Language language) {
  std::unordered_map<std::string, std::size_t> df;
  for (const auto& t : block_texts) {
    for (const auto& stat : count_terms(t, language)) ++df[stat.term];
  }
  const double n = static_cast<double>(block_texts.size());
  idf_.clear();
  for (const auto& [term, d] : df) {
    idf_[term] = std::log((1.0 + n) / (1.0 + static_cast<double>(d))) + 1.0;
  }
  unseen_idf_ = std::log(1.0 + n) + 1.0;
}

double FrequencyKeywordProvider::weight(const std::string& term) const {
  if (idf_.empty()) return 1.0;
  auto it = idf_.find(term);
  return it == idf_.end() ? unseen_idf_ : it->second;
}

std::vector<KeywordCandidate> FrequencyKeywordProvider::candidates(std::string_view block_text,
                                                                  Language language) const {
  auto stats = count_terms(block_text, language);
  if (stats.empty()) return {};
  std::vector<double> scores(stats.size());
  for (std::size_t i = 0; i < stats.size(); ++i) {
    scores[i] = static_cast<double>(stats[i].count) * weight(stats[i].term);
  }
  std::vector<std::size_t> order(stats.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    if (stats[a].first != stats[b].first) return stats[a].first < stats[b].first;
    return !stats[a].bigram && stats[b].bigram;
  });
  const double top = scores[order.front()];
  std::vector<KeywordCandidate> out;
  out.reserve(order.size());
  for (std::size_t i : order) out.push_back({stats[i].term, top > 0 ? scores[i] / top : 0.0});
  return out;
}

// ---------------------------------------------------------------------------
// HeuristicSrlProvider

namespace {

const std::unordered_set<std::string>& english_copulas() {
  static const std::unordered_set<std::string> words = {"is", "am", "are", "was", "were",
                                                        "be", "been", "being"};
  return words;
}

const std::unordered_set<std::string>& english_verbs() {
  static const std::unordered_set<std::string> words = {
      "have", "has", "had", "like", "likes", "liked", "love", "loves", "loved", "enjoy",
      "enjoys", "enjoyed", "want", "wants", "wanted", "need", "needs", "needed", "play",
      "plays", "played", "watch", "watches", "watched", "eat", "eats", "ate", "eating", "read",
      "reads", "work", "works", "worked", "live", "lives", "lived", "went", "go", "goes", "get",
      "gets", "got", "make", "makes", "made", "take", "takes", "took", "see", "sees", "saw",
      "know", "knew", "prefer", "prefers", "buy", "buys", "bought", "own", "owns", "visit",
      "visited", "study", "studies", "studied", "teach", "teaches", "taught", "hate", "hates",
      "listen", "drive", "drives", "drove", "cook", "cooks", "cooked", "collect", "collects",
      "use", "uses", "used", "build", "built", "write", "writes", "wrote", "find", "found",
      "keep", "keeps", "kept", "try", "tried", "feel", "felt", "call", "called", "bring",
      "brought", "adopt", "adopted", "sing", "sang", "paint", "painted", "run", "ran", "travel",
      "traveled", "grow", "grew", "raise", "raised", "miss", "missed", "talk", "talks",
      "talked", "think", "thinks", "thought"};
  return words;
}

const std::unordered_set<std::string>& english_boundaries() {
  static const std::unordered_set<std::string> words = {
      "when", "because", "if", "while", "although", "though", "since", "but", "so", "until",
      "unless", "whereas", "cause", "then", "and then"};
  return words;
}

const std::vector<std::string>& chinese_verbs() {
  // Longer entries first so they win over their prefixes.
  static const std::vector<std::string> words = {
      "喜欢", "觉得", "认为", "知道", "需要", "想要", "看到", "听说", "参加", "学习",
      "工作", "养", "是", "有", "看", "吃", "喝", "玩", "买", "去", "做", "学", "听", "读",
      "写", "爱", "想", "用"};
  return words;
}

struct Candidate {
  std::string predicate;
  std::size_t first = 0;  // piece range of the A1 span [first, last)
  std::size_t last = 0;
  std::size_t verb = 0;
};

}  // namespace

std::vector<SrlTuple> HeuristicSrlProvider::extract(std::string_view utterance,
                                                    Language language) const {
  const auto pieces = pieces_with_offsets(utterance, language);

  // Verb matches: (piece index, piece count, lemma surface, copula?)
  struct Verb {
    std::size_t index;
    std::size_t width;
    bool copula;
  };
  std::vector<bool> boundary(pieces.size(), false);
  std::vector<Verb> verbs;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    if (pieces[i].punct) {
      boundary[i] = true;
      continue;
    }
    if (language == Language::English) {
      const std::string w = text::to_lower_ascii(pieces[i].text);
      if (english_boundaries().contains(w)) boundary[i] = true;
      else if (english_copulas().contains(w)) verbs.push_back({i, 1, true});
      else if (english_verbs().contains(w)) verbs.push_back({i, 1, false});
    } else {
      for (const auto& v : chinese_verbs()) {
        const auto v_chars = text::utf8_chars(v);
        if (i + v_chars.size() > pieces.size()) continue;
        bool match = true;
        for (std::size_t k = 0; k < v_chars.size() && match; ++k) {
          match = pieces[i + k].text == v_chars[k];
        }
        if (match) {
          verbs.push_back({i, v_chars.size(), v == "是"});
          i += v_chars.size() - 1;
          break;
        }
      }
    }
  }

  auto is_stop = [&](std::size_t i) {
    return boundary[i] ||
           std::any_of(verbs.begin(), verbs.end(), [&](const Verb& v) {
             return i >= v.index && i < v.index + v.width;
           });
  };

  std::vector<Candidate> candidates;
  for (const auto& v : verbs) {
    Candidate c;
    c.verb = v.index;
    for (std::size_t k = 0; k < v.width; ++k) c.predicate += pieces[v.index + k].text;
    std::size_t first = v.index;
    std::size_t last = v.index;
    if (v.copula) {
      while (first > 0 && !is_stop(first - 1)) --first;
      last = v.index;
    }
    if (first == last) {
      first = v.index + v.width;
      last = first;
      while (last < pieces.size() && !is_stop(last)) ++last;
    }
    if (first == last) continue;
    c.first = first;
    c.last = last;
    candidates.push_back(std::move(c));
  }
  if (candidates.empty()) return {};

  const auto best = std::max_element(
      candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        return (a.last - a.first) < (b.last - b.first);
      });
  const std::size_t a1_start = pieces[best->first].start;
  const std::size_t a1_end = pieces[best->last - 1].end;
  const std::size_t verb_start = pieces[best->verb].start;
  const std::size_t verb_end = pieces[best->verb].end;

  SrlTuple tuple;
  tuple.predicate = best->predicate;
  tuple.roles["A1"] =
      RoleSpan{std::string(utterance.substr(a1_start, a1_end - a1_start)), a1_start, a1_end};
  tuple.start = std::min(a1_start, verb_start);
  tuple.end = std::max(a1_end, verb_end);
  return {tuple};
}

// ---------------------------------------------------------------------------
// JSON records and precomputed providers

SrlTuple srl_tuple_from_json(std::string_view json_text) {
  try {
    const json j = json::parse(json_text);
    SrlTuple t;
    t.predicate = j.at("predicate").get<std::string>();
    t.start = j.at("start").get<std::size_t>();
    t.end = j.at("end").get<std::size_t>();
    for (const auto& [tag, span] : j.at("roles").items()) {
      std::string key = tag;
      if (key == "ARG0") key = "A0";
      if (key == "ARG1") key = "A1";
      t.roles[key] = RoleSpan{span.at("text").get<std::string>(), span.at("start").get<std::size_t>(),
                              span.at("end").get<std::size_t>()};
    }
    return t;
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid SRL tuple record: ") + e.what());
  }
}

std::string srl_tuple_to_json(const SrlTuple& tuple) {
  json roles = json::object();
  for (const auto& [tag, span] : tuple.roles) {
    roles[tag] = {{"text", span.text}, {"start", span.start}, {"end", span.end}};
  }
  return json{{"predicate", tuple.predicate}, {"roles", roles}, {"start", tuple.start},
              {"end", tuple.end}}
      .dump();
}

std::vector<SrlTuple> ingest_tuples(std::string_view utterance, std::vector<SrlTuple> tuples) {
  std::vector<SrlTuple> out;
  for (auto& t : tuples) {
    if (t.roles.empty()) continue;
    auto check = [&](std::size_t start, std::size_t end, std::string_view what) {
      if (start > end || end > utterance.size()) {
        throw ValidationError("SRL " + std::string(what) + " span [" + std::to_string(start) +
                              ", " + std::to_string(end) + ") lies outside the utterance");
      }
    };
    check(t.start, t.end, "tuple");
    for (const auto& [tag, span] : t.roles) check(span.start, span.end, "role " + tag);
    out.push_back(std::move(t));
  }
  return out;
}

PrecomputedKeywordProvider::PrecomputedKeywordProvider(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open keyword file " + path.string());
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      std::vector<KeywordCandidate> list;
      for (const auto& c : j.at("candidates")) {
        list.push_back({c.at("term").get<std::string>(), c.at("confidence").get<double>()});
      }
      std::stable_sort(list.begin(), list.end(), [](const auto& a, const auto& b) {
        return a.confidence > b.confidence;
      });
      table_[j.at("text").get<std::string>()] = std::move(list);
    } catch (const json::exception& e) {
      throw ParseError(std::string("keyword record: ") + e.what(), n);
    }
  }
}

std::vector<KeywordCandidate> PrecomputedKeywordProvider::candidates(std::string_view block_text,
                                                                    Language) const {
  auto it = table_.find(std::string(block_text));
  if (it == table_.end()) throw Error("no precomputed keywords for block text");
  return it->second;
}

PrecomputedSrlProvider::PrecomputedSrlProvider(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open SRL file " + path.string());
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      std::vector<SrlTuple> list;
      for (const auto& t : j.at("tuples")) list.push_back(srl_tuple_from_json(t.dump()));
      table_[j.at("text").get<std::string>()] = std::move(list);
    } catch (const json::exception& e) {
      throw ParseError(std::string("SRL record: ") + e.what(), n);
    }
  }
}

std::vector<SrlTuple> PrecomputedSrlProvider::extract(std::string_view utterance,
                                                      Language) const {
  auto it = table_.find(std::string(utterance));
  if (it == table_.end()) throw Error("no precomputed SRL tuples for utterance");
  return it->second;
}

namespace {
constexpr std::string_view kPrecomputedPrefix = "precomputed:";
}

std::unique_ptr<KeywordProvider> make_keyword_provider(std::string_view spec) {
  if (spec == "frequency") return std::make_unique<FrequencyKeywordProvider>();
  if (spec.starts_with(kPrecomputedPrefix)) {
    return std::make_unique<PrecomputedKeywordProvider>(
        std::filesystem::path(std::string(spec.substr(kPrecomputedPrefix.size()))));
  }
  throw ValidationError("unknown keyword provider '" + std::string(spec) + "'");
}

std::unique_ptr<SrlProvider> make_srl_provider(std::string_view spec) {
  if (spec == "heuristic") return std::make_unique<HeuristicSrlProvider>();
  if (spec.starts_with(kPrecomputedPrefix)) {
    return std::make_unique<PrecomputedSrlProvider>(
        std::filesystem::path(std::string(spec.substr(kPrecomputedPrefix.size()))));
  }
  throw ValidationError("unknown SRL provider '" + std::string(spec) + "'");
}

// ---------------------------------------------------------------------------
// Keywords

std::vector<KeywordCandidate> keyword_candidates(const KeywordProvider& provider,
                                                 std::string_view block_text, Language language) {
  if (text::trim(block_text).empty()) return {};
  auto list = provider.candidates(block_text, language);
  std::erase_if(list, [](const KeywordCandidate& c) { return text::trim(c.term).empty(); });
  return list;
}

std::string fallback_keyword(const TopicBlock& block, const Dialogue& dialogue,
                             const std::set<std::string>& excluded) {
  const auto terms = text::content_terms(block_text(dialogue, block), dialogue.language);
  std::vector<std::pair<std::string, std::size_t>> counts;  // first-occurrence order
  std::unordered_map<std::string, std::size_t> slot;
  for (const auto& t : terms) {
    auto [it, inserted] = slot.emplace(t, counts.size());
    if (inserted) counts.emplace_back(t, 0);
    ++counts[it->second].second;
  }
  const std::pair<std::string, std::size_t>* best = nullptr;
  for (const auto& entry : counts) {
    if (excluded.contains(entry.first)) continue;
    if (!best || entry.second > best->second) best = &entry;
  }
  if (best) return best->first;

  std::string keyword(kFallbackKeyword);
  for (int suffix = 2; excluded.contains(keyword); ++suffix) {
    keyword = std::string(kFallbackKeyword) + " " + std::to_string(suffix);
  }
  return keyword;
}

std::vector<TopicBlock> assign_block_keywords(
    const Dialogue& dialogue, std::vector<TopicBlock> blocks,
    std::span<const std::vector<KeywordCandidate>> candidates) {
  if (candidates.size() != blocks.size()) {
    throw ValidationError("keyword candidates are not aligned with topic blocks");
  }
  for (auto& b : blocks) {
    b.keyword.reset();
    b.needs_review = false;
  }

  std::vector<std::size_t> order(blocks.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const bool ha = !candidates[a].empty();
    const bool hb = !candidates[b].empty();
    if (ha != hb) return ha;
    if (ha && candidates[a].front().confidence != candidates[b].front().confidence) {
      return candidates[a].front().confidence > candidates[b].front().confidence;
    }
    return a < b;
  });

  for (std::size_t b : order) {
    std::set<std::string> taken;
    if (b > 0 && blocks[b - 1].keyword) taken.insert(*blocks[b - 1].keyword);
    if (b + 1 < blocks.size() && blocks[b + 1].keyword) taken.insert(*blocks[b + 1].keyword);
    for (const auto& c : candidates[b]) {
      if (!taken.contains(c.term)) {
        blocks[b].keyword = c.term;
        break;
      }
    }
    if (!blocks[b].keyword) {
      blocks[b].keyword = fallback_keyword(blocks[b], dialogue, taken);
      blocks[b].needs_review = true;
    }
  }
  return blocks;
}

// ---------------------------------------------------------------------------
// Turn information

bool is_core_role(std::string_view tag) { return tag == "A0" || tag == "A1"; }

std::vector<SrlTuple> filter_tuples(std::vector<SrlTuple> tuples) {
  for (auto& t : tuples) {
    std::erase_if(t.roles, [](const auto& kv) { return !is_core_role(kv.first); });
  }
  std::vector<SrlTuple> survivors;
  for (std::size_t i = 0; i < tuples.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < tuples.size() && !dominated; ++j) {
      if (i == j) continue;
      const bool contains = tuples[j].start <= tuples[i].start && tuples[i].end <= tuples[j].end;
      const bool identical = tuples[j].start == tuples[i].start && tuples[j].end == tuples[i].end;
      dominated = contains && (!identical || j < i);
    }
    if (!dominated) survivors.push_back(tuples[i]);
  }
  return survivors;
}

namespace {

std::string fallback_info(std::string_view utterance, Language language) {
  std::vector<std::string> content;
  std::vector<std::string> any;
  for (const auto& unit : text::length_units(utterance, language)) {
    const auto chars = text::utf8_chars(unit);
    const bool all_punct = std::all_of(chars.begin(), chars.end(),
                                       [](const std::string& c) { return text::is_punctuation(c); });
    if (all_punct) continue;
    any.push_back(unit);
    std::string core = text::to_lower_ascii(unit);
    std::erase_if(core, [](char c) { return std::ispunct(static_cast<unsigned char>(c)) && c != '\''; });
    if (!text::is_stopword(core, language)) content.push_back(unit);
  }
  auto& chosen = content.empty() ? any : content;
  if (chosen.empty()) return "nothing";
  if (chosen.size() > kMaxTurnInfoUnits) chosen.resize(kMaxTurnInfoUnits);
  return text::join(chosen, language == Language::English ? " " : "");
}

}  // namespace

TurnInfo select_turn_info(const Utterance& utterance, Language language,
                          std::span<const SrlTuple> tuples) {
  TurnInfo info;
  info.utterance_index = utterance.index;

  const auto survivors = filter_tuples(std::vector<SrlTuple>(tuples.begin(), tuples.end()));

  const SrlTuple* best_a1 = nullptr;
  std::size_t best_a1_len = 0;
  const SrlTuple* best_pred = nullptr;
  std::size_t best_pred_len = 0;
  for (const auto& t : survivors) {
    if (auto it = t.roles.find("A1"); it != t.roles.end()) {
      const std::size_t len = text::length_in_units(it->second.text, language);
      if (len > best_a1_len) {
        best_a1 = &t;
        best_a1_len = len;
      }
    }
    const std::size_t plen = text::length_in_units(t.predicate, language);
    if (plen > best_pred_len) {
      best_pred = &t;
      best_pred_len = plen;
    }
  }

  if (best_a1) {
    info.info = text::truncate_units(best_a1->roles.at("A1").text, language, kMaxTurnInfoUnits);
    info.provenance = TurnInfoSource::A1;
  } else if (best_pred) {
    info.info = text::truncate_units(best_pred->predicate, language, kMaxTurnInfoUnits);
    info.provenance = TurnInfoSource::Predicate;
  } else {
    info.info = fallback_info(utterance.text, language);
    info.provenance = TurnInfoSource::Fallback;
  }
  return info;
}

}  // namespace topicshift
