#include <doctest.h>

#include "topicshift/corpus.hpp"
#include "topicshift/error.hpp"
#include "topicshift/text.hpp"

using namespace topicshift;
using Strings = std::vector<std::string>;

TEST_CASE("language tags") {
  CHECK(parse_language("en") == Language::English);
  CHECK(parse_language("zh") == Language::Chinese);
  CHECK(language_tag(Language::Chinese) == "zh");
  CHECK_THROWS_AS(parse_language("fr"), ValidationError);
}

TEST_CASE("utf8 code points") {
  CHECK(text::utf8_chars("a中b") == Strings{"a", "中", "b"});
  CHECK(text::utf8_chars("") == Strings{});
  CHECK(text::is_punctuation("，"));
  CHECK(text::is_punctuation("!"));
  CHECK_FALSE(text::is_punctuation("a"));
}

TEST_CASE("english tokenizer splits punctuation and keeps apostrophes") {
  CHECK(text::tokenize("I don't know, really!", Language::English) ==
        Strings{"I", "don't", "know", ",", "really", "!"});
  CHECK(text::tokenize("  spaced   out ", Language::English) == Strings{"spaced", "out"});
}

TEST_CASE("reserved markers are single tokens") {
  const auto toks = text::tokenize("<s> hi there <s>", Language::English, reserved_markers());
  CHECK(toks == Strings{"<s>", "hi", "there", "<s>"});
  const auto zh = text::tokenize("<s>你好<s>", Language::Chinese, reserved_markers());
  CHECK(zh == Strings{"<s>", "你", "好", "<s>"});
}

TEST_CASE("chinese tokenizer: one token per character, ascii words whole") {
  CHECK(text::tokenize("我喜欢NBA球赛。", Language::Chinese) ==
        Strings{"我", "喜", "欢", "NBA", "球", "赛", "。"});
}

TEST_CASE("detokenize") {
  const Strings en{"a", "b", "c"};
  CHECK(text::detokenize(en, Language::English) == "a b c");
  const Strings zh{"我", "喜", "欢", "NBA", "and", "球"};
  CHECK(text::detokenize(zh, Language::Chinese) == "我喜欢NBA and球");
}

TEST_CASE("length units and truncation") {
  CHECK(text::length_in_units("a weakness for cats", Language::English) == 4);
  CHECK(text::length_in_units("我 喜欢 猫", Language::Chinese) == 4);
  CHECK(text::truncate_units("one  two three four", Language::English, 2) == "one two");
  CHECK(text::truncate_units("一二三四五", Language::Chinese, 3) == "一二三");
  CHECK(text::truncate_units("short", Language::English, 10) == "short");
}

TEST_CASE("content terms drop stopwords, numbers and punctuation") {
  CHECK(text::content_terms("I have 1000 Hats , for them !", Language::English) == Strings{"hats"});
  CHECK(text::is_stopword("the", Language::English));
  CHECK_FALSE(text::is_stopword("cats", Language::English));
}

TEST_CASE("trim and split") {
  CHECK(text::trim("  x y \n") == "x y");
  CHECK(text::split_whitespace(" a  b\tc ") == Strings{"a", "b", "c"});
  CHECK(text::to_lower_ascii("MiXeD 中") == "mixed 中");
}
