#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace vai {

/// Versioned text container shared by model checkpoints: a magic line, a kind
/// line, ordered `key value` header lines, then row-major values in hexfloat
/// so a reload is bit-exact.
struct Checkpoint {
  static constexpr int kVersion = 1;

  std::string kind;
  std::vector<std::pair<std::string, std::string>> header;
  std::vector<double> values;

  const std::string& get(const std::string& key) const;
  void put(std::string key, std::string value) { header.emplace_back(std::move(key), std::move(value)); }

  void write(const std::filesystem::path& path) const;
  static Checkpoint read(const std::filesystem::path& path);
};

/// 9 significant digits, the format of every CSV output.
std::string format_real(double v);

}  // namespace vai
