#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "peerkt/knowledge_base.hpp"

namespace peerkt {

/// Bundle layout: graph.json, kc_graph.json, irt.json, repository.json,
/// manifest.json and checksums.txt ("<sha256>  <file>" per line).
inline constexpr const char* kBundleFiles[] = {"graph.json", "kc_graph.json", "irt.json",
                                               "repository.json", "manifest.json"};

/// Canonical text of each bundle document, keyed by file name.
std::map<std::string, std::string> serialize_bundle(const KnowledgeBase& kb);

/// Writes the bundle and returns the checksum table.
std::map<std::string, std::string> save_bundle(const KnowledgeBase& kb,
                                               const std::filesystem::path& dir);

/// Loads and checksum-verifies a bundle. Throws CorruptBundle or UnreadableFile.
KnowledgeBase load_bundle(const std::filesystem::path& dir);

std::map<std::string, std::string> read_checksums(const std::filesystem::path& dir);

}  // namespace peerkt
