#include "topicshift/prompts.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "topicshift/error.hpp"

namespace topicshift {

namespace detail {
std::string_view builtin_template_resource();
}

using nlohmann::json;

void Verbalizer::validate() const {
  if (shift_word.empty() || nonshift_word.empty()) {
    throw ValidationError("verbalizer words must be non-empty");
  }
  if (shift_word == nonshift_word) throw ValidationError("verbalizer words must differ");
  if (shift_word.find(nonshift_word) != std::string::npos) {
    throw ValidationError("the non-shift verbalizer word may not occur inside the shift word");
  }
}

TemplateParts split_template(std::string_view tmpl) {
  TemplateParts parts;
  std::string literal;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    bool matched = false;
    for (auto slot : {kLabelSlot, kPrevSlot, kCurSlot}) {
      if (tmpl.substr(i, slot.size()) == slot) {
        parts.literals.push_back(std::move(literal));
        literal.clear();
        parts.slots.emplace_back(slot);
        i += slot.size();
        matched = true;
        break;
      }
    }
    if (!matched) literal.push_back(tmpl[i++]);
  }
  parts.literals.push_back(std::move(literal));
  return parts;
}

const std::string& TemplateSet::for_granularity(Granularity g) const {
  switch (g) {
    case Granularity::Label: return label_template;
    case Granularity::Topic: return topic_template;
    case Granularity::Turn: return turn_template;
  }
  return label_template;
}

void TemplateSet::validate() const {
  verbalizer.validate();
  auto expect = [](const std::string& tmpl, std::vector<std::string> slots, std::string_view name) {
    const auto parts = split_template(tmpl);
    if (parts.slots != slots) {
      throw ValidationError(std::string(name) + " template has the wrong slots");
    }
    for (const auto& lit : parts.literals) {
      if (lit.find('{') != std::string::npos || lit.find('}') != std::string::npos) {
        throw ValidationError(std::string(name) + " template has an unknown slot marker");
      }
    }
    if (parts.literals.back().find(',') != std::string::npos) {
      throw ValidationError(std::string(name) + " template has a comma after the label slot");
    }
  };
  expect(label_template, {std::string(kLabelSlot)}, "label");
  expect(topic_template, {std::string(kPrevSlot), std::string(kCurSlot), std::string(kLabelSlot)},
         "topic");
  expect(turn_template, {std::string(kPrevSlot), std::string(kCurSlot), std::string(kLabelSlot)},
         "turn");
}

TemplateSet TemplateSet::from_json(std::string_view resource, Language language) {
  try {
    const json j = json::parse(resource);
    if (j.at("format").get<std::string>() != "topicshift-templates") {
      throw ParseError("not a template resource");
    }
    const auto& lang = j.at("languages").at(std::string(language_tag(language)));
    TemplateSet set;
    set.language = language;
    set.label_template = lang.at("label").get<std::string>();
    set.topic_template = lang.at("topic").get<std::string>();
    set.turn_template = lang.at("turn").get<std::string>();
    set.verbalizer.language = language;
    set.verbalizer.shift_word = lang.at("verbalizer").at("shift").get<std::string>();
    set.verbalizer.nonshift_word = lang.at("verbalizer").at("nonshift").get<std::string>();
    set.validate();
    return set;
  } catch (const json::exception& e) {
    throw ParseError(std::string("template resource: ") + e.what());
  }
}

TemplateSet TemplateSet::load(const std::string& path, Language language) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open template resource " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json(buffer.str(), language);
}

const TemplateSet& TemplateSet::builtin(Language language) {
  static const TemplateSet en = from_json(detail::builtin_template_resource(), Language::English);
  static const TemplateSet zh = from_json(detail::builtin_template_resource(), Language::Chinese);
  return language == Language::English ? en : zh;
}

namespace {

std::string render(const std::string& tmpl, std::string_view prev, std::string_view cur,
                   std::string_view label) {
  const auto parts = split_template(tmpl);
  std::string out = parts.literals[0];
  for (std::size_t i = 0; i < parts.slots.size(); ++i) {
    const auto& slot = parts.slots[i];
    if (slot == kLabelSlot) out += label;
    else if (slot == kPrevSlot) out += prev;
    else out += cur;
    out += parts.literals[i + 1];
  }
  return out;
}

void require_fill(std::string_view fill, std::string_view what) {
  if (text::trim(fill).empty()) throw ValidationError(std::string(what) + " must be non-empty");
}

}  // namespace

std::string verbalize_label(int label, const TemplateSet& templates) {
  if (label == 1) return templates.verbalizer.shift_word;
  if (label == 0) return templates.verbalizer.nonshift_word;
  throw ValidationError("label must be 0 or 1, got " + std::to_string(label));
}

std::string verbalize_label(int label, Language language) {
  return verbalize_label(label, TemplateSet::builtin(language));
}

std::string build_label_target(int label, const TemplateSet& templates) {
  return render(templates.label_template, {}, {}, verbalize_label(label, templates));
}

std::string build_topic_target(std::string_view prev_keyword, std::string_view cur_keyword,
                               int label, const TemplateSet& templates) {
  require_fill(prev_keyword, "previous keyword");
  require_fill(cur_keyword, "current keyword");
  return render(templates.topic_template, prev_keyword, cur_keyword,
                verbalize_label(label, templates));
}

std::string build_turn_target(std::string_view prev_info, std::string_view cur_info, int label,
                              const TemplateSet& templates) {
  require_fill(prev_info, "previous turn information");
  require_fill(cur_info, "current turn information");
  return render(templates.turn_template, prev_info, cur_info, verbalize_label(label, templates));
}

std::string build_label_target(int label, Language language) {
  return build_label_target(label, TemplateSet::builtin(language));
}
std::string build_topic_target(std::string_view prev_keyword, std::string_view cur_keyword,
                               int label, Language language) {
  return build_topic_target(prev_keyword, cur_keyword, label, TemplateSet::builtin(language));
}
std::string build_turn_target(std::string_view prev_info, std::string_view cur_info, int label,
                              Language language) {
  return build_turn_target(prev_info, cur_info, label, TemplateSet::builtin(language));
}

std::string masked_template(Granularity g, const TemplateSet& templates) {
  return render(templates.for_granularity(g), "[MASK]", "[MASK]", "[MASK]");
}

std::optional<int> parse_generated_label(std::string_view generated,
                                         const TemplateSet& templates) {
  std::size_t cut = 0;
  for (std::string_view comma : {",", "，"}) {
    const auto pos = generated.rfind(comma);
    if (pos != std::string_view::npos) cut = std::max(cut, pos + comma.size());
  }
  const std::string_view tail = generated.substr(cut);
  if (tail.find(templates.verbalizer.nonshift_word) != std::string_view::npos) return 0;
  if (tail.find(templates.verbalizer.shift_word) != std::string_view::npos) return 1;
  return std::nullopt;
}

std::optional<int> parse_generated_label(std::string_view generated, Language language) {
  return parse_generated_label(generated, TemplateSet::builtin(language));
}

}  // namespace topicshift
