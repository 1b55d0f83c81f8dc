#pragma once

// Filesystem helpers for the CLIs and stores. The record and crypto code in
// this directory stays free of I/O; only these functions touch disk.

#include <filesystem>
#include <string>
#include <vector>

#include "wait/core/records.h"

namespace waitsec {

// Error(kIo) on failure.
std::string read_file(const std::filesystem::path& path);
// Write to a sibling temp file, fsync, then rename over path.
void write_file_atomic(const std::filesystem::path& path, std::string_view content,
                       bool owner_only = false);

// Key files are canonical JSON {algorithm, public, private?}.
DeveloperKey load_key_file(const std::filesystem::path& path);
void save_key_file(const std::filesystem::path& path, const DeveloperKey& key);

// JSON array of LogIdentity.
std::vector<LogIdentity> load_log_list(const std::filesystem::path& path);
std::string log_list_json(const std::vector<LogIdentity>& logs);

}  // namespace waitsec
