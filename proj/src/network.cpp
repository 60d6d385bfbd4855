#include "cwatch/network.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <deque>
#include <tuple>

#include "cwatch/error.hpp"
#include "cwatch/topic_result.hpp"
#include "cwatch/xml.hpp"

namespace cwatch {

namespace {

constexpr std::string_view kGraphmlNs = "http://graphml.graphdrawing.org/xmlns";

struct KeyDef {
  const char* id;
  const char* domain;
  const char* type;
};

constexpr KeyDef kKeys[] = {
    {"name", "node", "string"},
    {"post_count", "node", "int"},
    {"topic_count", "node", "int"},
    {"thread_count", "node", "int"},
    {"weighted_in_degree", "node", "int"},
    {"weighted_out_degree", "node", "int"},
    {"betweenness", "node", "double"},
    {"closeness", "node", "double"},
    {"topic", "edge", "int"},
    {"weight", "edge", "int"},
};

void add_data(xml::Node& parent, const std::string& key, std::string value) {
  auto& d = parent.append_text_element("data", std::move(value));
  d.set_attribute("key", key);
}

int to_int(std::string_view s) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size())
    throw Error("network-format", "expected an integer, got '" + std::string(s) + "'");
  return v;
}

double to_double(std::string_view s) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size())
    throw Error("network-format", "expected a number, got '" + std::string(s) + "'");
  return v;
}

std::string export_graphml(const SocialNetwork& n) {
  xml::Node root = xml::Node::element("graphml");
  root.set_attribute("xmlns", std::string(kGraphmlNs));
  for (const auto& k : kKeys) {
    auto& key = root.append_element("key");
    key.set_attribute("id", k.id);
    key.set_attribute("for", k.domain);
    key.set_attribute("attr.name", k.id);
    key.set_attribute("attr.type", k.type);
  }
  auto& graph = root.append_element("graph");
  graph.set_attribute("id", "G");
  graph.set_attribute("edgedefault", "directed");
  std::map<std::string, std::string> ids;
  for (const auto& [name, rec] : n.nodes) {
    std::string id = "n" + std::to_string(ids.size());
    ids[name] = id;
    auto& node = graph.append_element("node");
    node.set_attribute("id", id);
    add_data(node, "name", name);
    add_data(node, "post_count", std::to_string(rec.author.post_count));
    add_data(node, "topic_count", std::to_string(rec.author.topic_count));
    add_data(node, "thread_count", std::to_string(rec.author.thread_count));
    add_data(node, "weighted_in_degree", std::to_string(rec.metrics.weighted_in_degree));
    add_data(node, "weighted_out_degree", std::to_string(rec.metrics.weighted_out_degree));
    add_data(node, "betweenness", format_score(rec.metrics.betweenness));
    add_data(node, "closeness", format_score(rec.metrics.closeness));
  }
  std::size_t e = 0;
  for (const auto& arc : n.arcs) {
    auto& edge = graph.append_element("edge");
    edge.set_attribute("id", "e" + std::to_string(e++));
    edge.set_attribute("source", ids.at(arc.src));
    edge.set_attribute("target", ids.at(arc.dst));
    add_data(edge, "topic", std::to_string(arc.topic));
    add_data(edge, "weight", std::to_string(arc.weight));
  }
  return xml::write(root, {2, true});
}

SocialNetwork import_graphml(std::string_view document) {
  xml::Node root = [&] {
    try {
      return xml::parse(document);
    } catch (const Error& e) {
      throw Error("network-format", e.what());
    }
  }();
  xml::strip_layout_whitespace(root);
  if (root.name() != "graphml") throw Error("network-format", "root element must be <graphml>");
  const xml::Node* graph = root.child("graph");
  if (!graph) throw Error("network-format", "missing <graph>");
  SocialNetwork n;
  std::map<std::string, std::string> names;
  auto data_of = [](const xml::Node& el) {
    std::map<std::string, std::string> out;
    for (const xml::Node* d : el.children_named("data"))
      if (const std::string* key = d->attribute("key")) out[*key] = d->text_content();
    return out;
  };
  auto need = [](const std::map<std::string, std::string>& m, const std::string& key) -> const std::string& {
    auto it = m.find(key);
    if (it == m.end()) throw Error("network-format", "missing data key " + key);
    return it->second;
  };
  for (const xml::Node* node : graph->children_named("node")) {
    const std::string* id = node->attribute("id");
    if (!id) throw Error("network-format", "node without id");
    auto data = data_of(*node);
    NodeRecord rec;
    rec.author.name = need(data, "name");
    rec.author.post_count = to_int(need(data, "post_count"));
    rec.author.topic_count = to_int(need(data, "topic_count"));
    rec.author.thread_count = to_int(need(data, "thread_count"));
    rec.metrics.weighted_in_degree = to_int(need(data, "weighted_in_degree"));
    rec.metrics.weighted_out_degree = to_int(need(data, "weighted_out_degree"));
    rec.metrics.betweenness = to_double(need(data, "betweenness"));
    rec.metrics.closeness = to_double(need(data, "closeness"));
    names[*id] = rec.author.name;
    n.nodes[rec.author.name] = rec;
  }
  for (const xml::Node* edge : graph->children_named("edge")) {
    const std::string* s = edge->attribute("source");
    const std::string* t = edge->attribute("target");
    if (!s || !t || !names.count(*s) || !names.count(*t)) throw Error("network-format", "edge with unknown endpoint");
    auto data = data_of(*edge);
    Arc arc{names[*s], names[*t], to_int(need(data, "topic")), to_int(need(data, "weight"))};
    n.topic_ids.insert(arc.topic);
    n.arcs.push_back(std::move(arc));
  }
  return n;
}

std::string export_json(const SocialNetwork& n) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["nodes"] = ordered_json::array();
  for (const auto& [name, rec] : n.nodes) {
    j["nodes"].push_back({{"name", name},
                          {"post_count", rec.author.post_count},
                          {"topic_count", rec.author.topic_count},
                          {"thread_count", rec.author.thread_count},
                          {"weighted_in_degree", rec.metrics.weighted_in_degree},
                          {"weighted_out_degree", rec.metrics.weighted_out_degree},
                          {"betweenness", rec.metrics.betweenness},
                          {"closeness", rec.metrics.closeness}});
  }
  j["arcs"] = ordered_json::array();
  for (const auto& a : n.arcs)
    j["arcs"].push_back({{"source", a.src}, {"target", a.dst}, {"topic", a.topic}, {"weight", a.weight}});
  j["topics"] = n.topic_ids;
  return j.dump(2) + "\n";
}

SocialNetwork import_json(std::string_view document) {
  using nlohmann::json;
  try {
    json j = json::parse(document);
    SocialNetwork n;
    for (const auto& node : j.at("nodes")) {
      NodeRecord rec;
      rec.author.name = node.at("name").get<std::string>();
      rec.author.post_count = node.at("post_count").get<int>();
      rec.author.topic_count = node.at("topic_count").get<int>();
      rec.author.thread_count = node.at("thread_count").get<int>();
      rec.metrics.weighted_in_degree = node.at("weighted_in_degree").get<int>();
      rec.metrics.weighted_out_degree = node.at("weighted_out_degree").get<int>();
      rec.metrics.betweenness = node.at("betweenness").get<double>();
      rec.metrics.closeness = node.at("closeness").get<double>();
      n.nodes[rec.author.name] = rec;
    }
    for (const auto& a : j.at("arcs")) {
      Arc arc{a.at("source").get<std::string>(), a.at("target").get<std::string>(), a.at("topic").get<int>(),
              a.at("weight").get<int>()};
      if (!n.nodes.count(arc.src) || !n.nodes.count(arc.dst)) throw Error("network-format", "arc with unknown endpoint");
      n.topic_ids.insert(arc.topic);
      n.arcs.push_back(std::move(arc));
    }
    return n;
  } catch (const json::exception& e) {
    throw Error("network-format", e.what());
  }
}

}  // namespace

SocialNetwork build_network(const std::vector<CanonicalThread>& threads,
                            const std::map<PostRef, std::set<int>>& assignments, std::vector<std::string>* warnings) {
  SocialNetwork n;
  std::map<std::string, std::set<std::string>> author_threads;
  std::map<std::string, std::set<int>> author_topics;
  std::map<std::tuple<std::string, std::string, int>, int> weights;

  for (const auto& t : threads) {
    for (const auto& p : t.posts) {
      auto& rec = n.nodes[p.author];
      rec.author.name = p.author;
      ++rec.author.post_count;
      author_threads[p.author].insert(t.thread_id);
      auto a = assignments.find({t.thread_id, p.post_id});
      if (a != assignments.end()) author_topics[p.author].insert(a->second.begin(), a->second.end());

      if (!p.reply_to) continue;
      const Post* target = t.find_post(*p.reply_to);
      if (!target) continue;  // excluded by validate_thread
      if (a == assignments.end() || a->second.empty()) {
        ++weights[{p.author, target->author, kUnassignedTopic}];
        if (warnings) warnings->push_back("reply " + PostRef{t.thread_id, p.post_id}.str() + " has no topic assignment");
        continue;
      }
      for (int topic : a->second) ++weights[{p.author, target->author, topic}];
    }
  }
  for (auto& [name, rec] : n.nodes) {
    rec.author.thread_count = static_cast<int>(author_threads[name].size());
    rec.author.topic_count = static_cast<int>(author_topics[name].size());
  }
  for (const auto& [key, w] : weights) {
    const auto& [src, dst, topic] = key;
    n.arcs.push_back({src, dst, topic, w});
    n.topic_ids.insert(topic);
  }
  compute_metrics(n);
  return n;
}

Digraph collapse(const SocialNetwork& network) {
  std::map<std::string, int> index;
  for (const auto& [name, rec] : network.nodes) index.emplace(name, static_cast<int>(index.size()));
  std::vector<std::set<int>> out(index.size());
  for (const auto& a : network.arcs) out[index.at(a.src)].insert(index.at(a.dst));
  Digraph g(index.size());
  for (std::size_t i = 0; i < out.size(); ++i) g[i].assign(out[i].begin(), out[i].end());
  return g;
}

std::vector<double> betweenness(const Digraph& g) {
  const std::size_t n = g.size();
  std::vector<double> bc(n, 0.0);
  std::vector<long long> dist(n);
  std::vector<double> sigma(n), delta(n);
  std::vector<std::vector<int>> preds(n);
  std::vector<int> order;
  order.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), -1);
    std::fill(sigma.begin(), sigma.end(), 0.0);
    std::fill(delta.begin(), delta.end(), 0.0);
    for (auto& p : preds) p.clear();
    order.clear();
    std::deque<int> queue{static_cast<int>(s)};
    dist[s] = 0;
    sigma[s] = 1;
    while (!queue.empty()) {
      int v = queue.front();
      queue.pop_front();
      order.push_back(v);
      for (int w : g[v]) {
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          queue.push_back(w);
        }
        if (dist[w] == dist[v] + 1) {
          sigma[w] += sigma[v];
          preds[w].push_back(v);
        }
      }
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      int w = *it;
      for (int v : preds[w]) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
      if (w != static_cast<int>(s)) bc[w] += delta[w];
    }
  }
  return bc;
}

std::vector<double> harmonic_closeness(const Digraph& g) {
  const std::size_t n = g.size();
  std::vector<double> out(n, 0.0);
  std::vector<long long> dist(n);
  for (std::size_t s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), -1);
    std::deque<int> queue{static_cast<int>(s)};
    dist[s] = 0;
    while (!queue.empty()) {
      int v = queue.front();
      queue.pop_front();
      for (int w : g[v])
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          queue.push_back(w);
        }
    }
    double sum = 0;
    for (std::size_t u = 0; u < n; ++u)
      if (u != s && dist[u] > 0) sum += 1.0 / static_cast<double>(dist[u]);
    out[s] = sum;
  }
  return out;
}

std::map<std::string, std::pair<int, int>> weighted_degrees(const SocialNetwork& network) {
  std::map<std::string, std::pair<int, int>> out;
  for (const auto& [name, rec] : network.nodes) out[name] = {0, 0};
  for (const auto& a : network.arcs) {
    out[a.dst].first += a.weight;
    out[a.src].second += a.weight;
  }
  return out;
}

void compute_metrics(SocialNetwork& network) {
  auto degrees = weighted_degrees(network);
  Digraph g = collapse(network);
  auto bc = betweenness(g);
  auto cc = harmonic_closeness(g);
  std::size_t i = 0;
  for (auto& [name, rec] : network.nodes) {
    rec.metrics.weighted_in_degree = degrees[name].first;
    rec.metrics.weighted_out_degree = degrees[name].second;
    rec.metrics.betweenness = bc[i];
    rec.metrics.closeness = cc[i];
    ++i;
  }
}

SocialNetwork filter_by_topics(const SocialNetwork& network, const std::set<int>& topics, bool keep_isolated) {
  SocialNetwork out;
  std::set<std::string> touched;
  for (const auto& a : network.arcs) {
    if (!topics.count(a.topic)) continue;
    out.arcs.push_back(a);
    out.topic_ids.insert(a.topic);
    touched.insert(a.src);
    touched.insert(a.dst);
  }
  for (const auto& [name, rec] : network.nodes)
    if (keep_isolated || touched.count(name)) out.nodes.emplace(name, rec);
  compute_metrics(out);
  return out;
}

std::string export_network(const SocialNetwork& network, std::string_view format) {
  if (format == "graphml") return export_graphml(network);
  if (format == "json") return export_json(network);
  throw Error("unknown-format", "unknown network format: " + std::string(format));
}

SocialNetwork import_network(std::string_view document, std::string_view format) {
  if (format == "graphml") return import_graphml(document);
  if (format == "json") return import_json(document);
  throw Error("unknown-format", "unknown network format: " + std::string(format));
}

}  // namespace cwatch
