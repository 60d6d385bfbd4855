#include "cwatch/canonical.hpp"

#include "cwatch/error.hpp"

namespace cwatch {

xml::Node canonical_tree(const CanonicalThread& t) {
  auto root = xml::Node::element("thread");
  root.append_text_element("id", t.thread_id);
  root.append_text_element("url", t.source_url);
  root.append_text_element("site", t.site_id);
  root.append_text_element("title", t.title);
  root.append_text_element("fetched_at", format_iso8601(t.fetched_at));
  for (const auto& p : t.posts) {
    auto& post = root.append_element("post");
    post.append_text_element("id", p.post_id);
    post.append_text_element("author", p.author);
    post.append_text_element("timestamp", format_iso8601(p.timestamp));
    if (p.reply_to) {
      auto& reply = post.append_text_element("reply_to", *p.reply_to);
      reply.set_attribute("evidence", std::string(to_string(p.reply_evidence)));
    }
    post.append_text_element("content", p.content);
  }
  return root;
}

std::string serialize_canonical(const CanonicalThread& thread) {
  return xml::write(canonical_tree(thread), {.indent = 2, .declaration = true});
}

namespace {

[[noreturn]] void fail(const std::string& what) { throw Error("canonical-format", what); }

const xml::Node& required(const xml::Node& parent, std::string_view name) {
  const xml::Node* n = parent.child(name);
  if (!n) fail("missing <" + std::string(name) + "> in <" + parent.name() + ">");
  return *n;
}

Timestamp required_time(const xml::Node& parent, std::string_view name) {
  auto text = required(parent, name).text_content();
  auto t = parse_iso8601(text);
  if (!t) fail("bad timestamp '" + text + "' in <" + std::string(name) + ">");
  return *t;
}

}  // namespace

CanonicalThread canonical_from_tree(const xml::Node& root) {
  if (root.name() != "thread") fail("root element must be <thread>");
  CanonicalThread t;
  t.thread_id = required(root, "id").text_content();
  t.source_url = required(root, "url").text_content();
  t.site_id = required(root, "site").text_content();
  t.title = required(root, "title").text_content();
  t.fetched_at = required_time(root, "fetched_at");
  for (const xml::Node* post : root.children_named("post")) {
    Post p;
    p.post_id = required(*post, "id").text_content();
    p.author = required(*post, "author").text_content();
    p.timestamp = required_time(*post, "timestamp");
    if (const xml::Node* reply = post->child("reply_to")) {
      p.reply_to = reply->text_content();
      const std::string* ev = reply->attribute("evidence");
      auto evidence = ev ? parse_reply_evidence(*ev) : std::nullopt;
      if (!evidence || *evidence == ReplyEvidence::none) fail("bad reply_to evidence in post " + p.post_id);
      p.reply_evidence = *evidence;
    }
    p.content = required(*post, "content").text_content();
    t.posts.push_back(std::move(p));
  }
  return t;
}

CanonicalThread deserialize_canonical(std::string_view document) {
  xml::Node root;
  try {
    root = xml::parse(document);
  } catch (const Error& e) {
    fail(e.what());
  }
  return canonical_from_tree(root);
}

}  // namespace cwatch
