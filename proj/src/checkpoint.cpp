#include "vai/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "vai/core.hpp"

namespace vai {

const std::string& Checkpoint::get(const std::string& key) const {
  for (const auto& [k, v] : header)
    if (k == key) return v;
  throw InvalidInput("checkpoint header is missing '" + key + "'");
}

void Checkpoint::write(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << "vai-checkpoint " << kVersion << "\n";
  out << "kind " << kind << "\n";
  for (const auto& [k, v] : header) out << k << " " << v << "\n";
  out << "values " << values.size() << "\n";
  char buf[64];
  for (double v : values) {
    std::snprintf(buf, sizeof buf, "%a\n", v);
    out << buf;
  }
}

Checkpoint Checkpoint::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open checkpoint " + path.string());
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "vai-checkpoint" || version != kVersion)
    throw InvalidInput("not a version " + std::to_string(kVersion) + " checkpoint: " + path.string());
  Checkpoint cp;
  std::string key;
  in >> key >> cp.kind;
  if (key != "kind") throw InvalidInput("checkpoint is missing its kind line");
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string k, v;
    ls >> k;
    if (k == "values") {
      std::size_t count = 0;
      ls >> count;
      cp.values.reserve(count);
      for (std::size_t i = 0; i < count; ++i) {
        if (!std::getline(in, line)) throw InvalidInput("checkpoint truncated: " + path.string());
        cp.values.push_back(std::strtod(line.c_str(), nullptr));
      }
      return cp;
    }
    std::getline(ls >> std::ws, v);
    cp.header.emplace_back(k, v);
  }
  throw InvalidInput("checkpoint has no values section: " + path.string());
}

std::string format_real(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace vai
