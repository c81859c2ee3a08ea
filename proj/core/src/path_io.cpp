#include "lassonet/path_io.hpp"

#include <unistd.h>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lassonet/errors.hpp"

namespace lassonet {

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw NumericalError("format_double: conversion failed");
  return std::string(buf, p);
}

void atomic_write_text(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path tmp = path.parent_path() /
                       (path.filename().string() + ".tmp." + std::to_string(::getpid()));
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw ParseError("atomic_write_text: cannot open " + tmp.string());
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw ParseError("atomic_write_text: write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string meta_header(const std::vector<std::pair<std::string, std::string>>& kv) {
  std::ostringstream os;
  for (const auto& [k, v] : kv) os << "# " << k << ": " << v << "\n";
  return os.str();
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_hex64(const std::string& s) {
  return std::stoull(s, nullptr, 16);
}

double parse_double_str(const std::string& s, const char* what) {
  double v;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw ParseError(std::string("path file: bad ") + what + " value '" + s + "'");
  return v;
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string sanitize_name(std::string name) {
  for (char& c : name)
    if (c == ';' || c == ',' || c == '\n') c = '_';
  return name;
}

}  // namespace

std::string render_path_file(const PathFileMeta& meta, const std::vector<PathRecord>& records) {
  std::ostringstream os;
  os << "# lassonet path export v1\n";
  os << meta_header({{"tool_version", meta.tool_version},
                     {"seed", std::to_string(meta.seed)},
                     {"dataset_fingerprint", hex64(meta.dataset_fingerprint)},
                     {"config", meta.config_echo},
                     {"metric", meta.metric_name},
                     {"higher_is_better", meta.metric_higher_better ? "1" : "0"},
                     {"columns",
                      "lambda,k_active,active_indices,active_names,train_loss,val_loss,"
                      "val_metric,snapshot"}});
  for (const PathRecord& r : records) {
    os << format_double(r.lambda) << ',' << r.k_active << ',';
    for (std::size_t i = 0; i < r.active.size(); ++i) {
      if (i) os << ';';
      os << r.active[i];
    }
    os << ',';
    for (std::size_t i = 0; i < r.active_names.size(); ++i) {
      if (i) os << ';';
      os << sanitize_name(r.active_names[i]);
    }
    os << ',' << format_double(r.train_loss) << ',' << format_double(r.val_loss) << ','
       << format_double(r.val_metric) << ',' << r.snapshot_ref << '\n';
  }
  return os.str();
}

void write_path_file(const std::filesystem::path& path, const PathFileMeta& meta,
                     const std::vector<PathRecord>& records) {
  atomic_write_text(path, render_path_file(meta, records));
}

PathFileContent read_path_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("path file: cannot open " + path.string());
  PathFileContent out;
  std::string line;
  bool saw_magic = false;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (line.rfind("# lassonet path export", 0) == 0) {
        saw_magic = true;
        continue;
      }
      const auto colon = line.find(':');
      if (colon == std::string::npos) continue;
      std::string key = line.substr(2, colon - 2);
      std::string value = line.substr(colon + 1);
      if (!value.empty() && value.front() == ' ') value.erase(value.begin());
      if (key == "tool_version") out.meta.tool_version = value;
      else if (key == "seed") out.meta.seed = std::stoull(value);
      else if (key == "dataset_fingerprint") out.meta.dataset_fingerprint = parse_hex64(value);
      else if (key == "config") out.meta.config_echo = value;
      else if (key == "metric") out.meta.metric_name = value;
      else if (key == "higher_is_better") out.meta.metric_higher_better = value == "1";
      continue;
    }
    if (!saw_magic) throw ParseError("path file: missing export header in " + path.string());
    const auto cells = split_on(line, ',');
    if (cells.size() != 8)
      throw ParseError("path file: malformed record '" + line + "' in " + path.string());
    PathRecord r;
    r.lambda = parse_double_str(cells[0], "lambda");
    r.k_active = static_cast<std::size_t>(std::stoull(cells[1]));
    if (!cells[2].empty())
      for (const std::string& s : split_on(cells[2], ';'))
        r.active.push_back(static_cast<std::size_t>(std::stoull(s)));
    if (!cells[3].empty()) r.active_names = split_on(cells[3], ';');
    r.train_loss = parse_double_str(cells[4], "train_loss");
    r.val_loss = parse_double_str(cells[5], "val_loss");
    r.val_metric = parse_double_str(cells[6], "val_metric");
    r.snapshot_ref = cells[7];
    if (r.k_active != r.active.size())
      throw ParseError("path file: k_active mismatch in record for lambda " + cells[0]);
    out.records.push_back(std::move(r));
  }
  if (!saw_magic) throw ParseError("path file: missing export header in " + path.string());
  return out;
}

}  // namespace lassonet
