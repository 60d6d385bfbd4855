#include "cwatch/extract.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <unordered_set>

#include "cwatch/selector.hpp"
#include "cwatch/url.hpp"

namespace cwatch {

namespace {

using Severity = ExtractionDiagnostic::Severity;

const std::unordered_set<std::string_view>& block_elements() {
  static const std::unordered_set<std::string_view> set = {
      "address", "article", "aside", "blockquote", "dd", "div", "dl", "dt", "fieldset",
      "figcaption", "figure", "footer", "form", "h1", "h2", "h3", "h4", "h5", "h6",
      "header", "hr", "li", "main", "nav", "ol", "p", "pre", "section", "table",
      "tbody", "thead", "tfoot", "tr", "ul"};
  return set;
}

bool space_at(std::string_view s, std::size_t i, std::size_t& width) {
  auto c = static_cast<unsigned char>(s[i]);
  width = 1;
  if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') return true;
  if (c == 0xC2 && i + 1 < s.size() && static_cast<unsigned char>(s[i + 1]) == 0xA0) {
    width = 2;
    return true;
  }
  return false;
}

void render(const xml::Node& node, std::string& out) {
  if (node.is_text()) {
    // source line breaks are plain whitespace; only markup breaks lines
    for (char c : node.text()) out += c == '\n' ? ' ' : c;
    return;
  }
  if (node.name() == "br") {
    out += '\n';
    return;
  }
  bool block = block_elements().count(node.name()) > 0;
  if (block) out += '\n';
  // cells of one row stay on one line
  if (node.name() == "td" || node.name() == "th") out += ' ';
  for (const auto& c : node.children()) render(c, out);
  if (block) out += '\n';
}

std::optional<std::string> first_value(const Selector& selector, const xml::Node& context, const DocumentIndex& index) {
  auto matches = select(selector, context, index);
  if (matches.empty()) return std::nullopt;
  if (matches.front().attribute_value) return matches.front().attribute_value;
  return element_plain_text(*matches.front().element);
}

ExtractionDiagnostic diag(Severity s, std::string code, std::string selector, std::string context) {
  return {s, std::move(code), std::move(selector), std::move(context)};
}

// "#post-12", "thread.html#post-12" and "post-12" all name native id post-12.
std::optional<std::size_t> resolve_link(const std::string& link, const std::map<std::string, std::size_t>& ids) {
  std::string key = collapse_whitespace(link);
  if (auto it = ids.find(key); it != ids.end()) return it->second;
  if (auto hash = key.rfind('#'); hash != std::string::npos) {
    if (auto it = ids.find(key.substr(hash + 1)); it != ids.end()) return it->second;
  }
  return std::nullopt;
}

bool mention_boundary(std::string_view content, std::size_t pos) {
  if (pos >= content.size()) return true;
  char c = content[pos];
  return std::isspace(static_cast<unsigned char>(c)) || c == ',' || c == ':' || c == ';' || c == '.' ||
         c == '!' || c == '?' || c == ')';
}

}  // namespace

bool PageExtraction::has_errors() const {
  return std::any_of(diagnostics.begin(), diagnostics.end(), [](const auto& d) { return d.is_error(); });
}

bool ThreadExtraction::has_errors() const {
  return std::any_of(diagnostics.begin(), diagnostics.end(), [](const auto& d) { return d.is_error(); });
}

std::string collapse_whitespace(std::string_view text) {
  std::string out;
  bool pending = false;
  for (std::size_t i = 0; i < text.size();) {
    std::size_t width = 1;
    if (space_at(text, i, width)) {
      pending = !out.empty();
      i += width;
      continue;
    }
    if (pending) out += ' ';
    pending = false;
    out += text[i++];
  }
  return out;
}

std::string element_plain_text(const xml::Node& node) {
  std::string raw;
  render(node, raw);
  std::string out;
  std::size_t pos = 0;
  while (pos <= raw.size()) {
    std::size_t next = raw.find('\n', pos);
    if (next == std::string::npos) next = raw.size();
    std::string line = collapse_whitespace(std::string_view(raw).substr(pos, next - pos));
    if (!line.empty()) {
      if (!out.empty()) out += '\n';
      out += line;
    }
    pos = next + 1;
  }
  return out;
}

PageExtraction extract_page(const CleanDocument& doc, const SiteDefinition& def) {
  PageExtraction page;
  DocumentIndex index(doc.root);
  const auto& tr = def.thread_rules;
  const auto& pr = def.post_rules;

  Selector title_sel = Selector::parse(tr.title_selector);
  Selector posts_sel = Selector::parse(tr.post_list_selector);
  Selector author_sel = Selector::parse(pr.author_selector);
  Selector time_sel = Selector::parse(pr.timestamp_selector);
  Selector content_sel = Selector::parse(pr.content_selector);
  std::optional<Selector> id_sel, reply_sel, next_sel;
  if (pr.id_selector) id_sel = Selector::parse(*pr.id_selector);
  if (pr.reply_link_selector) reply_sel = Selector::parse(*pr.reply_link_selector);
  if (tr.next_page_selector) next_sel = Selector::parse(*tr.next_page_selector);

  if (auto title = first_value(title_sel, doc.root, index)) page.title = collapse_whitespace(*title);
  if (page.title.empty())
    page.diagnostics.push_back(diag(Severity::error, "missing-title", tr.title_selector, doc.source_url));

  if (next_sel) {
    if (auto href = first_value(*next_sel, doc.root, index)) {
      auto base = parse_url(doc.source_url);
      auto resolved = base ? resolve_url(*base, *href) : std::nullopt;
      if (resolved)
        page.next_page = strip_fragment(*resolved);
      else
        page.diagnostics.push_back(diag(Severity::warning, "bad-next-page", *tr.next_page_selector, *href));
    }
  }

  auto post_nodes = select(posts_sel, doc.root, index);
  if (post_nodes.empty()) {
    page.diagnostics.push_back(diag(Severity::error, "empty-post-list", tr.post_list_selector, doc.source_url));
    return page;
  }

  std::size_t ordinal = 0;
  for (const auto& match : post_nodes) {
    ++ordinal;
    if (!match.element) continue;
    const xml::Node& node = *match.element;
    std::string where = doc.source_url + " post #" + std::to_string(ordinal);
    PagePost post;

    if (id_sel) {
      if (auto v = first_value(*id_sel, node, index)) post.native_id = collapse_whitespace(*v);
    } else if (const std::string* id = node.attribute("id")) {
      post.native_id = *id;
    }
    if (post.native_id.empty()) post.native_id = "#" + std::to_string(ordinal);

    auto author = first_value(author_sel, node, index);
    auto name = author ? normalize_author_name(*author) : std::nullopt;
    if (!name) {
      page.diagnostics.push_back(diag(Severity::warning, "missing-author", pr.author_selector, where));
      post.author = std::string(kAnonymousAuthor);
    } else {
      post.author = *name;
    }

    auto time_text = first_value(time_sel, node, index);
    std::optional<Timestamp> ts;
    if (time_text) {
      std::string text = collapse_whitespace(*time_text);
      for (const auto& fmt : pr.timestamp_formats)
        if ((ts = parse_with_format(text, fmt, pr.utc_offset))) break;
    }
    if (!ts) {
      // per-post failure: the post is dropped, the thread survives
      page.diagnostics.push_back(diag(Severity::warning, "unparseable-timestamp", pr.timestamp_selector,
                                      where + ": '" + time_text.value_or("") + "'"));
      continue;
    }
    post.timestamp = *ts;

    auto content_matches = select(content_sel, node, index);
    if (content_matches.empty())
      page.diagnostics.push_back(diag(Severity::warning, "missing-content", pr.content_selector, where));
    for (const auto& m : content_matches) {
      std::string part = m.attribute_value ? collapse_whitespace(*m.attribute_value) : element_plain_text(*m.element);
      if (part.empty()) continue;
      if (!post.content.empty()) post.content += '\n';
      post.content += part;
    }

    if (reply_sel) {
      if (auto link = first_value(*reply_sel, node, index); link && !collapse_whitespace(*link).empty())
        post.reply_link = collapse_whitespace(*link);
    }
    page.posts.push_back(std::move(post));
  }
  return page;
}

ThreadExtraction assemble_thread(std::vector<PageExtraction> pages, const SiteDefinition& def,
                                 const std::string& source_url, Timestamp fetched_at) {
  ThreadExtraction out;
  std::vector<PagePost> posts;
  std::unordered_set<std::string> seen_native;
  std::string title;
  for (auto& page : pages) {
    out.diagnostics.insert(out.diagnostics.end(), page.diagnostics.begin(), page.diagnostics.end());
    if (title.empty()) title = page.title;
    for (auto& p : page.posts) {
      // Forums often repeat the opening post on every page.
      if (p.native_id.front() != '#' && !seen_native.insert(p.native_id).second) {
        out.diagnostics.push_back(diag(Severity::warning, "duplicate-post", def.post_rules.id_selector.value_or("@id"), p.native_id));
        continue;
      }
      posts.push_back(std::move(p));
    }
  }
  if (out.has_errors()) return out;
  if (posts.empty()) {
    out.diagnostics.push_back(diag(Severity::error, "no-posts", def.thread_rules.post_list_selector, source_url));
    return out;
  }

  std::stable_sort(posts.begin(), posts.end(), [](const PagePost& a, const PagePost& b) { return a.timestamp < b.timestamp; });

  std::map<std::string, std::size_t> native_index;
  for (std::size_t i = 0; i < posts.size(); ++i)
    if (posts[i].native_id.front() != '#') native_index.emplace(posts[i].native_id, i);

  CanonicalThread thread;
  thread.source_url = source_url;
  thread.site_id = def.site_id;
  thread.title = title;
  thread.fetched_at = fetched_at;
  for (std::size_t i = 0; i < posts.size(); ++i) {
    Post p;
    p.post_id = "p" + std::to_string(i + 1);
    p.author = posts[i].author;
    p.timestamp = posts[i].timestamp;
    p.content = posts[i].content;
    if (posts[i].reply_link) {
      const std::string& link = *posts[i].reply_link;
      const std::string selector = def.post_rules.reply_link_selector.value_or("");
      auto target = resolve_link(link, native_index);
      if (!target)
        out.diagnostics.push_back(diag(Severity::warning, "unresolved-reply", selector, p.post_id + " -> " + link));
      else if (*target == i)
        out.diagnostics.push_back(diag(Severity::warning, "self-reply", selector, p.post_id + " -> " + link));
      else if (*target > i)
        out.diagnostics.push_back(diag(Severity::warning, "forward-reply", selector, p.post_id + " -> " + link));
      else {
        p.reply_to = "p" + std::to_string(*target + 1);
        p.reply_evidence = ReplyEvidence::structural;
      }
    }
    thread.posts.push_back(std::move(p));
  }
  thread.thread_id = make_thread_id(thread.title, thread.posts.front().author, thread.posts.front().timestamp);
  out.thread = std::move(thread);
  return out;
}

ThreadExtraction apply_definition(const CleanDocument& doc, const SiteDefinition& def, Timestamp fetched_at) {
  std::vector<PageExtraction> pages;
  pages.push_back(extract_page(doc, def));
  return assemble_thread(std::move(pages), def, doc.source_url, fetched_at);
}

CanonicalThread resolve_name_mentions(CanonicalThread thread) {
  auto& posts = thread.posts;
  for (std::size_t i = 0; i < posts.size(); ++i) {
    Post& p = posts[i];
    if (p.reply_to) continue;
    std::string_view content = p.content;
    std::optional<std::size_t> best;
    std::size_t best_len = 0;
    // The longest matching name wins ("David VIETI" over "David").
    for (std::size_t j = i; j-- > 0;) {
      const std::string& name = posts[j].author;
      if (name == kAnonymousAuthor || name.size() <= best_len) continue;
      bool at_form = content.size() > name.size() && content[0] == '@' &&
                     content.compare(1, name.size(), name) == 0 && mention_boundary(content, name.size() + 1);
      bool colon_form = content.size() > name.size() && content.compare(0, name.size(), name) == 0 &&
                        content[name.size()] == ':';
      if (at_form || colon_form) {
        best = j;
        best_len = name.size();
      }
    }
    if (best) {
      // j iterates downwards, so the first hit for a name is its latest post
      p.reply_to = posts[*best].post_id;
      p.reply_evidence = ReplyEvidence::name_mention;
    }
  }
  return thread;
}

}  // namespace cwatch
