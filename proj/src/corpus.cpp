#include "cwatch/corpus.hpp"

#include <unicode/brkiter.h>
#include <unicode/locid.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <memory>

#include "cwatch/error.hpp"

namespace cwatch {

std::set<std::string> builtin_stopwords(std::string_view id);  // stopwords.cpp

namespace {

bool whitespace_only(const icu::UnicodeString& s, int32_t from, int32_t to) {
  for (int32_t i = from; i < to;) {
    UChar32 c = s.char32At(i);
    if (!u_isUWhiteSpace(c)) return false;
    i = s.moveIndex32(i, 1);
  }
  return true;
}

int code_points(const std::string& utf8) {
  return icu::UnicodeString::fromUTF8(utf8).countChar32();
}

}  // namespace

std::vector<WordToken> tokenize(std::string_view text, bool lowercase) {
  icu::UnicodeString u = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  UErrorCode status = U_ZERO_ERROR;
  std::unique_ptr<icu::BreakIterator> it(icu::BreakIterator::createWordInstance(icu::Locale::getRoot(), status));
  if (U_FAILURE(status)) throw Error("tokenizer", std::string("ICU word iterator unavailable: ") + u_errorName(status));
  it->setText(u);

  std::vector<WordToken> out;
  int32_t prev_end = -1;
  int32_t start = it->first();
  for (int32_t end = it->next(); end != icu::BreakIterator::DONE; start = end, end = it->next()) {
    int32_t rule = it->getRuleStatus();
    bool letters = (rule >= UBRK_WORD_LETTER && rule < UBRK_WORD_LETTER_LIMIT) ||
                   (rule >= UBRK_WORD_KANA && rule < UBRK_WORD_KANA_LIMIT) ||
                   (rule >= UBRK_WORD_IDEO && rule < UBRK_WORD_IDEO_LIMIT);
    if (!letters) continue;
    icu::UnicodeString word = u.tempSubStringBetween(start, end);
    if (lowercase) word.toLower(icu::Locale::getRoot());
    WordToken tok;
    word.toUTF8String(tok.text);
    tok.joined = prev_end >= 0 && whitespace_only(u, prev_end, start);
    out.push_back(std::move(tok));
    prev_end = end;
  }
  return out;
}

std::set<std::string> stopword_list(const CorpusOptions& options) {
  if (options.stopwords == "custom") {
    std::set<std::string> out;
    for (const auto& w : options.custom_stopwords) {
      for (auto& t : tokenize(w, options.lowercase)) out.insert(t.text);
    }
    return out;
  }
  std::set<std::string> out;
  std::string_view ids = options.stopwords;
  while (!ids.empty()) {
    auto plus = ids.find('+');
    std::string_view id = ids.substr(0, plus);
    auto words = builtin_stopwords(id);
    if (words.empty() && id != "none") throw Error("unknown-stopwords", "unknown stopword list: " + std::string(id));
    out.insert(words.begin(), words.end());
    ids = plus == std::string_view::npos ? std::string_view{} : ids.substr(plus + 1);
  }
  if (!options.lowercase) {
    // Lists are lowercase; match capitalized forms too.
    std::set<std::string> extra;
    for (const auto& w : out) {
      icu::UnicodeString u = icu::UnicodeString::fromUTF8(w);
      u.toTitle(nullptr, icu::Locale::getRoot());
      std::string s;
      extra.insert(u.toUTF8String(s));
    }
    out.insert(extra.begin(), extra.end());
  }
  return out;
}

std::size_t TokenizedCorpus::token_count() const {
  std::size_t n = 0;
  for (const auto& d : documents) n += d.tokens.size();
  return n;
}

namespace {

struct Pending {
  PostRef ref;
  std::vector<WordToken> words;  // after stopword/length filtering, joined recomputed
};

TokenizedCorpus finish(std::vector<Pending> pending, const CorpusOptions& options, std::string list_id) {
  std::map<std::string, int> df;
  for (const auto& p : pending) {
    std::set<std::string> seen;
    for (const auto& w : p.words)
      if (seen.insert(w.text).second) ++df[w.text];
  }
  TokenizedCorpus corpus;
  corpus.options = options;
  corpus.stopword_list_id = std::move(list_id);
  for (const auto& [term, n] : df)
    if (n >= options.min_doc_freq) {
      corpus.index[term] = static_cast<int>(corpus.vocabulary.size());
      corpus.vocabulary.push_back(term);
    }
  for (auto& p : pending) {
    Document doc;
    doc.ref = p.ref;
    bool gap = true;
    for (const auto& w : p.words) {
      auto it = corpus.index.find(w.text);
      if (it == corpus.index.end()) {
        gap = true;
        continue;
      }
      doc.tokens.push_back({it->second, w.joined && !gap});
      gap = false;
    }
    if (doc.tokens.empty()) corpus.excluded.push_back(p.ref);
    else corpus.documents.push_back(std::move(doc));
  }
  if (corpus.documents.empty()) throw Error("empty-corpus", "no post has any token left after filtering");
  return corpus;
}

}  // namespace

TokenizedCorpus prepare_corpus(const std::vector<CanonicalThread>& threads, const CorpusOptions& options) {
  if (options.min_token_len < 0 || options.min_doc_freq < 1)
    throw Error("invalid-parameter", "min_token_len must be >= 0 and min_doc_freq >= 1");
  std::set<std::string> stop = stopword_list(options);
  std::vector<Pending> pending;
  for (const auto& t : threads) {
    for (const auto& post : t.posts) {
      Pending p{{t.thread_id, post.post_id}, {}};
      bool gap = true;
      for (auto& w : tokenize(post.content, options.lowercase)) {
        if (stop.count(w.text) || code_points(w.text) < options.min_token_len) {
          gap = true;
          continue;
        }
        w.joined = w.joined && !gap;
        gap = false;
        p.words.push_back(std::move(w));
      }
      pending.push_back(std::move(p));
    }
  }
  return finish(std::move(pending), options, options.stopwords);
}

TokenizedCorpus corpus_from_words(const std::vector<std::pair<PostRef, std::vector<std::string>>>& docs) {
  std::vector<Pending> pending;
  for (const auto& [ref, words] : docs) {
    Pending p{ref, {}};
    for (std::size_t i = 0; i < words.size(); ++i) p.words.push_back({words[i], i > 0});
    pending.push_back(std::move(p));
  }
  CorpusOptions options;
  options.stopwords = "none";
  options.min_token_len = 0;
  return finish(std::move(pending), options, "none");
}

}  // namespace cwatch
