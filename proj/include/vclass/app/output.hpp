#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace vclass::app {

inline constexpr const char* kToolName = "vclass";
inline constexpr const char* kToolVersion = "0.1.0";

/// 12 significant digits, "nan"/"inf" spelled out.
std::string format_number(double v);

/// Value rounded to 12 significant digits; null for non-finite input.
nlohmann::ordered_json json_number(double v);

/**
 * Collects output files and commits them together: each is written to a
 * temporary sibling and renamed into place only after every write succeeded,
 * so a failed run leaves no partial outputs behind.
 */
class OutputSet {
 public:
  OutputSet() = default;
  OutputSet(const OutputSet&) = delete;
  OutputSet& operator=(const OutputSet&) = delete;
  ~OutputSet();

  void add(const std::filesystem::path& path, const std::string& content);
  void commit();

 private:
  std::vector<std::pair<std::filesystem::path, std::filesystem::path>> staged_;
  bool committed_ = false;
};

}  // namespace vclass::app
