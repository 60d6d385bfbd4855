#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "cwatch/model.hpp"

namespace cwatch {

struct CorpusOptions {
  bool lowercase = true;
  int min_token_len = 2;  // in code points
  int min_doc_freq = 1;
  // "en", "fr", "en+fr", "none", or "custom" (uses custom_stopwords).
  std::string stopwords = "en";
  std::vector<std::string> custom_stopwords;
};

// Words of a text on Unicode word boundaries. Only segments containing a
// letter are words. `joined` is true when the previous word is separated
// from this one by whitespace alone.
struct WordToken {
  std::string text;
  bool joined = false;
};

std::vector<WordToken> tokenize(std::string_view text, bool lowercase);

struct Token {
  int term = 0;
  // Adjacent to the previous surviving token in the source text: only
  // whitespace between them and nothing filtered out in between. Phrases
  // never span a gap.
  bool joined = false;
};

struct Document {
  PostRef ref;
  std::vector<Token> tokens;
};

// One document per post, in (thread order, post order).
struct TokenizedCorpus {
  std::vector<Document> documents;
  std::vector<std::string> vocabulary;  // sorted
  std::map<std::string, int> index;
  std::string stopword_list_id;
  CorpusOptions options;
  std::vector<PostRef> excluded;  // posts left with no tokens

  std::size_t token_count() const;
};

// Throws cwatch::Error("unknown-stopwords").
std::set<std::string> stopword_list(const CorpusOptions& options);

// Throws cwatch::Error("empty-corpus") when no post keeps a token.
TokenizedCorpus prepare_corpus(const std::vector<CanonicalThread>& threads, const CorpusOptions& options = {});

// Builds a corpus from pre-tokenized documents; tokens in one document are
// all joined. Used for synthetic corpora.
TokenizedCorpus corpus_from_words(const std::vector<std::pair<PostRef, std::vector<std::string>>>& docs);

}  // namespace cwatch
