#pragma once

#include <string>
#include <string_view>

#include "cwatch/model.hpp"
#include "cwatch/xml.hpp"

namespace cwatch {

// Canonical interchange document for one thread:
//
//   <thread>
//     <id/> <url/> <site/> <title/> <fetched_at/>
//     <post> <id/> <author/> <timestamp/> [<reply_to evidence="..."/>] <content/> </post>*
//   </thread>
//
// Two-space indentation, UTF-8, trailing newline. This is the byte-exact
// golden format of the parser conformance corpus.
xml::Node canonical_tree(const CanonicalThread& thread);
std::string serialize_canonical(const CanonicalThread& thread);

// Throws cwatch::Error("canonical-format") on structural problems.
CanonicalThread canonical_from_tree(const xml::Node& root);
CanonicalThread deserialize_canonical(std::string_view document);

}  // namespace cwatch
